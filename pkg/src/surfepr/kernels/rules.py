"""Triangle quadrature rules and assembly tier settings."""
from dataclasses import dataclass

import numpy as np

_S15 = np.sqrt(15.0)
_A1, _B1 = (9 - 2 * _S15) / 21, (6 + _S15) / 21
_A2, _B2 = (9 + 2 * _S15) / 21, (6 - _S15) / 21

# 7-point degree-5 rule (Dunavant); weights sum to one
BARY7 = np.array([
    [1 / 3, 1 / 3, 1 / 3],
    [_A1, _B1, _B1], [_B1, _A1, _B1], [_B1, _B1, _A1],
    [_A2, _B2, _B2], [_B2, _A2, _B2], [_B2, _B2, _A2],
])
W7 = np.array([0.225] + [(155 + _S15) / 1200] * 3 + [(155 - _S15) / 1200] * 3)

# 3-point degree-2 rule
BARY3 = np.array([[2 / 3, 1 / 6, 1 / 6], [1 / 6, 2 / 3, 1 / 6], [1 / 6, 1 / 6, 2 / 3]])
W3 = np.full(3, 1 / 3)


def gauss01(n):
    """Gauss-Legendre nodes and weights on (0, 1)."""
    x, w = np.polynomial.legendre.leggauss(int(n))
    return 0.5 * (x + 1.0), 0.5 * w


def rule_points(tri, bary):
    """Quadrature points of triangles (N, 3, 3) for barycentric rows (q, 3)."""
    return np.einsum("qk,nkd->nqd", bary, tri)


@dataclass(frozen=True)
class QuadratureConfig:
    """Pair classification for assembly and field evaluation.

    Distances are centre-to-centre in units of the larger element
    diameter. ``near`` pairs integrate the 1/r part analytically over the
    inner element; below ``close`` (gap over outer diameter) the outer
    integral switches to a Duffy rule of order ``duffy_order``. Beyond
    ``near`` the 7-point rule is used on both elements, beyond ``mid`` the
    3-point rule and beyond ``far`` the centroid rule.
    """

    near: float = 3.0
    mid: float = 8.0
    far: float = 30.0
    close: float = 1.0
    duffy_order: int = 8

    def as_array(self):
        return np.array([self.near, self.mid, self.far, self.close])
