"""Gauss-Legendre and Gauss-Lobatto rules on the reference interval [0, 1].

Nodes and weights are stored as 20-digit constants for 1..8 points (Gauss)
and 2..8 points (Lobatto); no root finding happens at runtime.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

_GAUSS = {
    1: (
        (0.5,),
        (1.0,),
    ),
    2: (
        (0.21132486540518711775, 0.78867513459481288225),
        (0.5, 0.5),
    ),
    3: (
        (0.11270166537925831148, 0.5, 0.88729833462074168852),
        (0.27777777777777777778, 0.44444444444444444444, 0.27777777777777777778),
    ),
    4: (
        (0.069431844202973712388, 0.3300094782075718676, 0.6699905217924281324, 0.93056815579702628761),
        (0.17392742256872692869, 0.32607257743127307131, 0.32607257743127307131, 0.17392742256872692869),
    ),
    5: (
        (0.046910077030668003601, 0.23076534494715845448, 0.5, 0.76923465505284154552, 0.9530899229693319964),
        (0.11846344252809454376, 0.23931433524968323402, 0.28444444444444444444, 0.23931433524968323402, 0.11846344252809454376),
    ),
    6: (
        (0.033765242898423986094, 0.16939530676686774317, 0.38069040695840154568, 0.61930959304159845432, 0.83060469323313225683, 0.96623475710157601391),
        (0.08566224618958517252, 0.18038078652406930378, 0.23395696728634552369, 0.23395696728634552369, 0.18038078652406930378, 0.08566224618958517252),
    ),
    7: (
        (0.025446043828620737737, 0.12923440720030278007, 0.29707742431130141655, 0.5, 0.70292257568869858345, 0.87076559279969721993, 0.97455395617137926226),
        (0.064742483084434846635, 0.13985269574463833395, 0.19091502525255947248, 0.20897959183673469388, 0.19091502525255947248, 0.13985269574463833395, 0.064742483084434846635),
    ),
    8: (
        (0.019855071751231884158, 0.1016667612931866302, 0.23723379504183550709, 0.40828267875217509753, 0.59171732124782490247, 0.76276620495816449291, 0.8983332387068133698, 0.98014492824876811584),
        (0.050614268145188129576, 0.11119051722668723527, 0.15685332293894364367, 0.18134189168918099148, 0.18134189168918099148, 0.15685332293894364367, 0.11119051722668723527, 0.050614268145188129576),
    ),
}
_LOBATTO = {
    2: (
        (0.0, 1.0),
        (0.5, 0.5),
    ),
    3: (
        (0.0, 0.5, 1.0),
        (0.16666666666666666667, 0.66666666666666666667, 0.16666666666666666667),
    ),
    4: (
        (0.0, 0.27639320225002103036, 0.72360679774997896964, 1.0),
        (0.083333333333333333333, 0.41666666666666666667, 0.41666666666666666667, 0.083333333333333333333),
    ),
    5: (
        (0.0, 0.1726731646460114281, 0.5, 0.8273268353539885719, 1.0),
        (0.05, 0.27222222222222222222, 0.35555555555555555556, 0.27222222222222222222, 0.05),
    ),
    6: (
        (0.0, 0.11747233803526765357, 0.35738424175967745184, 0.64261575824032254816, 0.88252766196473234643, 1.0),
        (0.033333333333333333333, 0.18923747814892349016, 0.27742918851774317651, 0.27742918851774317651, 0.18923747814892349016, 0.033333333333333333333),
    ),
    7: (
        (0.0, 0.084888051860716535064, 0.2655756032646428931, 0.5, 0.7344243967353571069, 0.91511194813928346494, 1.0),
        (0.023809523809523809524, 0.13841302368078297401, 0.21587269060493131171, 0.24380952380952380952, 0.21587269060493131171, 0.13841302368078297401, 0.023809523809523809524),
    ),
    8: (
        (0.0, 0.064129925745196692331, 0.20414990928342884893, 0.39535039104876056562, 0.60464960895123943438, 0.79585009071657115107, 0.93587007425480330767, 1.0),
        (0.017857142857142857143, 0.10535211357175301969, 0.17056134624175218238, 0.20622939732935194078, 0.20622939732935194078, 0.17056134624175218238, 0.10535211357175301969, 0.017857142857142857143),
    ),
}


@dataclass(frozen=True)
class QuadratureRule1D:
    nodes: np.ndarray
    weights: np.ndarray

    @property
    def n(self) -> int:
        return self.nodes.size

    def on_interval(self, a: float, b: float) -> tuple[np.ndarray, np.ndarray]:
        """Points and weights mapped affinely onto [a, b]."""
        return a + (b - a) * self.nodes, (b - a) * self.weights

    def integrate(self, f, a: float = 0.0, b: float = 1.0) -> float:
        t, w = self.on_interval(a, b)
        return float(np.dot(w, f(t)))


@dataclass(frozen=True)
class QuadratureRule2D:
    points: np.ndarray  # (n, 2)
    weights: np.ndarray

    @property
    def x(self) -> np.ndarray:
        return self.points[:, 0]

    @property
    def y(self) -> np.ndarray:
        return self.points[:, 1]


def _make(table, n, kind):
    if n not in table:
        lo, hi = min(table), max(table)
        raise ValueError(f"{kind} rule supports {lo} <= n <= {hi} points, got {n}")
    nodes, weights = table[n]
    rule = QuadratureRule1D(np.array(nodes, dtype=float), np.array(weights, dtype=float))
    rule.nodes.flags.writeable = False
    rule.weights.flags.writeable = False
    return rule


def gauss_legendre(n: int) -> QuadratureRule1D:
    """n-point Gauss rule on [0, 1], exact for degree 2n-1."""
    return _make(_GAUSS, n, "Gauss-Legendre")


def gauss_lobatto(n: int) -> QuadratureRule1D:
    """n-point Gauss-Lobatto rule on [0, 1] (endpoints included), exact for degree 2n-3."""
    return _make(_LOBATTO, n, "Gauss-Lobatto")


def exactness_degree(rule: QuadratureRule1D, lobatto: bool = False) -> int:
    return 2 * rule.n - (3 if lobatto else 1)


def tensorize(rule: QuadratureRule1D) -> QuadratureRule2D:
    """Product rule on [0, 1]^2; x varies fastest."""
    X, Y = np.meshgrid(rule.nodes, rule.nodes)
    WX, WY = np.meshgrid(rule.weights, rule.weights)
    pts = np.column_stack([X.ravel(), Y.ravel()])
    return QuadratureRule2D(pts, (WX * WY).ravel())
