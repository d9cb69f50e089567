"""
Error Types
Hierarki exception untuk solver SFP. Semua turunan SfpError, sekaligus turunan
exception builtin yang sesuai agar pemanggil lama tetap bisa menangkapnya.
"""


class SfpError(Exception):
    """Base class untuk semua error solver."""


class DomainError(SfpError, ValueError):
    """Precondition dilanggar (misalnya lower >= upper, nu < 0)."""


class IllPosedProblemError(SfpError, ValueError):
    """Objective skalar bernilai non-finite saat pencarian."""

    def __init__(self, x: float, value: float):
        self.x = x
        self.value = value
        super().__init__(
            f"Objective is not finite at x={x!r} (value={value!r}); "
            "the pointwise problem is ill-posed"
        )


class NonFiniteIntegrandError(SfpError, ValueError):
    """Integrand bernilai non-finite pada node kuadratur."""

    def __init__(self, node, value):
        self.node = node
        self.value = value
        super().__init__(f"Integrand is not finite at node {node!r} (value={value!r})")


class DataFormatError(SfpError, ValueError):
    """File input rusak; pesan selalu menyebut file dan baris."""

    def __init__(self, path: str, line: int, message: str):
        self.path = path
        self.line = line
        super().__init__(f"{path}:{line}: {message}")


class ConfigError(SfpError, ValueError):
    """Kunci konfigurasi tidak dikenal atau nilainya tidak valid."""

    def __init__(self, key: str, message: str = "unknown configuration key"):
        self.key = key
        super().__init__(f"{message}: {key!r}")


class SaturationHypothesisError(SfpError, ValueError):
    """Minimizer pointwise tidak jenuh di +-Gamma, relasi L0/L1 tidak berlaku."""

    def __init__(self, mu, beta, x_star: float, gamma: float):
        self.mu = mu
        self.beta = beta
        self.x_star = x_star
        super().__init__(
            f"Saturation hypothesis violated at beta={beta!r}: "
            f"|x*|={abs(x_star):.6g} is neither 0 nor Gamma={gamma:.6g} (mu={mu!r})"
        )


class NoAcceptedIterateError(SfpError, RuntimeError):
    """Solver stokastik selesai tanpa iterate yang diterima."""
