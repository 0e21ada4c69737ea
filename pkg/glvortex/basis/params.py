import math
from dataclasses import dataclass

D2_GAMMA1_LIMIT = 0.25


@dataclass(frozen=True)
class ModeParams:
    """
    Parameters (d, gamma1, gamma2) of the linearized radial system.

    mu is the spectral parameter multiplying (1 - f^2); mu = 1 is the
    linearization itself.
    """
    d: float
    gamma1: float
    gamma2: float
    mu: float = 1.0

    def __post_init__(self):
        if self.d <= 0:
            raise ValueError(f'd must be > 0, got {self.d}')
        if self.gamma1 < 0 or self.gamma2 < self.gamma1:
            raise ValueError(f'Need 0 <= gamma1 <= gamma2, got gamma1={self.gamma1}, gamma2={self.gamma2}')
        if self.gamma_sq - self.mu * self.d ** 2 <= 0:
            raise ValueError(f'Need (gamma1^2 + gamma2^2)/2 > mu d^2, got gamma_sq={self.gamma_sq}, '
                             f'mu d^2={self.mu * self.d ** 2}')

    @classmethod
    def from_mode(cls, d, n, mu=1.0):
        """Parameters (d, |n - d|, n + d) of the Fourier mode n."""
        return cls(d=float(d), gamma1=abs(n - d), gamma2=n + d, mu=mu)

    @property
    def gamma_sq(self):
        return (self.gamma1 ** 2 + self.gamma2 ** 2) / 2

    @property
    def xi_sq(self):
        return (self.gamma2 ** 2 - self.gamma1 ** 2) / 2

    @property
    def n(self):
        return math.sqrt(self.gamma_sq - self.mu * self.d ** 2)

    @property
    def in_D(self):
        return (self.d >= 1 and self.gamma2 > 1
                and 0 <= self.gamma1 <= self.gamma2 < self.gamma1 + 2 * self.d + 2)

    @property
    def in_D1(self):
        return self.in_D and self.gamma1 > 0

    @property
    def in_D2(self):
        return (self.in_D and self.gamma1 < D2_GAMMA1_LIMIT
                and -self.gamma1 - self.gamma2 + 2 * self.d + 2 > 0
                and -self.gamma2 + 2 * self.d + 1 > 0)

    @property
    def domain_flags(self):
        return {'D': self.in_D, 'D1': self.in_D1, 'D2': self.in_D2}

    @property
    def singular_branch_domain(self):
        """Which construction the Zero2 / Zero4 branches use, 'D2' preferred."""
        if self.in_D2:
            return 'D2'
        if self.in_D1:
            return 'D1'
        return None

    def info(self):
        return {'d': self.d, 'gamma1': self.gamma1, 'gamma2': self.gamma2, 'mu': self.mu,
                'n': self.n, **self.domain_flags}
