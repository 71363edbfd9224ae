"""Curvature tensors and their covariant derivatives from a metric jet.

Input is the 3-jet of a metric at a batch of points, as arrays indexed
``g[P, a, b]``, ``dg[P, a, b, c] = d_c g_ab``, ``d2g[P, a, b, c, d]`` and
``d3g[P, a, b, c, d, e]``. Index conventions (all indices lowered):

    Gamma_{m,bc} = (d_b g_mc + d_c g_mb - d_m g_bc) / 2
    R_abcd       = (g_ad,bc + g_bc,ad - g_ac,bd - g_bd,ac) / 2
                   + g_mn (G^m_bc G^n_ad - G^m_bd G^n_ac)
    Ric_bd       = g^ac R_abcd,     scal = g^bd Ric_bd
    W_abcd       = R_abcd - (g_ac Ric_bd - g_ad Ric_bc + g_bd Ric_ac - g_bc Ric_ad) / (n-2)
                   + scal (g_ac g_bd - g_ad g_bc) / ((n-1)(n-2))

With these signs the unit round sphere has ``Ric = (n-1) g``. The Weyl
formula is the standard trace-free part and needs ``n >= 3`` (it vanishes
identically for ``n = 3``).
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from ._validation import InputError

es = np.einsum


@dataclass
class CurvatureJet:
    """Curvature data at a batch of ``P`` points (leading axis)."""

    g: np.ndarray
    ginv: np.ndarray
    christoffel: np.ndarray  # G^a_bc
    riemann: np.ndarray
    ricci: np.ndarray
    scalar: np.ndarray
    weyl: np.ndarray
    nabla_riemann: np.ndarray  # last index is the derivative direction
    nabla_weyl: np.ndarray
    nabla_ricci: np.ndarray
    nabla_dt: np.ndarray  # covariant derivative of the 1-form dx^0

    @property
    def n(self):
        return self.g.shape[-1]

    def __len__(self):
        return self.g.shape[0]


def _covariant(T, dT, gamma):
    """``nabla_e T`` for a fully covariant ``T`` with ``dT[..., e] = d_e T``."""
    rank = T.ndim - 1
    out = dT.copy()
    letters = "abcdfh"[:rank]
    for pos in range(rank):
        src = letters[:pos] + "m" + letters[pos + 1:]
        # G^m_{e, idx_pos} T_{.. m ..}
        out -= es(f"Pme{letters[pos]},P{src}->P{letters}e", gamma, T)
    return out


def weyl_from(R, Ric, scal, g):
    n = g.shape[-1]
    if n < 3:
        raise InputError("Weyl tensor needs dimension >= 3")
    kn = (es("Pac,Pbd->Pabcd", g, Ric) - es("Pad,Pbc->Pabcd", g, Ric)
          + es("Pbd,Pac->Pabcd", g, Ric) - es("Pbc,Pad->Pabcd", g, Ric))
    gg = es("Pac,Pbd->Pabcd", g, g) - es("Pad,Pbc->Pabcd", g, g)
    return R - kn / (n - 2) + scal[:, None, None, None, None] * gg / ((n - 1) * (n - 2))


def curvature_from_jet(g, dg, d2g, d3g):
    """Christoffels, Riemann, Ricci, scalar, Weyl and first covariant derivatives."""
    g = np.asarray(g, dtype=float)
    if g.ndim == 2:
        g, dg, d2g, d3g = g[None], dg[None], d2g[None], d3g[None]
    n = g.shape[-1]
    ginv = np.linalg.inv(g)
    dginv = -es("Pam,Pmne,Pnb->Pabe", ginv, dg, ginv)

    # first-kind symbols and their derivatives
    G1 = 0.5 * (es("Pmcb->Pmbc", dg) + es("Pmbc->Pmbc", dg) - es("Pbcm->Pmbc", dg))
    dG1 = 0.5 * (es("Pmcbe->Pmbce", d2g) + es("Pmbce->Pmbce", d2g) - es("Pbcme->Pmbce", d2g))
    G2 = es("Pam,Pmbc->Pabc", ginv, G1)
    dG2 = es("Pame,Pmbc->Pabce", dginv, G1) + es("Pam,Pmbce->Pabce", ginv, dG1)

    lin = 0.5 * (es("Padbc->Pabcd", d2g) + es("Pbcad->Pabcd", d2g)
                 - es("Pacbd->Pabcd", d2g) - es("Pbdac->Pabcd", d2g))
    quad = es("Pmbc,Pmad->Pabcd", G1, G2) - es("Pmbd,Pmac->Pabcd", G1, G2)
    R = lin + quad

    dlin = 0.5 * (es("Padbce->Pabcde", d3g) + es("Pbcade->Pabcde", d3g)
                  - es("Pacbde->Pabcde", d3g) - es("Pbdace->Pabcde", d3g))
    dquad = (es("Pmbce,Pmad->Pabcde", dG1, G2) + es("Pmbc,Pmade->Pabcde", G1, dG2)
             - es("Pmbde,Pmac->Pabcde", dG1, G2) - es("Pmbd,Pmace->Pabcde", G1, dG2))
    dR = dlin + dquad

    Ric = es("Pac,Pabcd->Pbd", ginv, R)
    dRic = es("Pace,Pabcd->Pbde", dginv, R) + es("Pac,Pabcde->Pbde", ginv, dR)
    scal = es("Pbd,Pbd->P", ginv, Ric)
    dscal = es("Pbde,Pbd->Pe", dginv, Ric) + es("Pbd,Pbde->Pe", ginv, dRic)

    W = weyl_from(R, Ric, scal, g)
    kn_d = (es("Pace,Pbd->Pabcde", dg, Ric) + es("Pac,Pbde->Pabcde", g, dRic)
            - es("Pade,Pbc->Pabcde", dg, Ric) - es("Pad,Pbce->Pabcde", g, dRic)
            + es("Pbde,Pac->Pabcde", dg, Ric) + es("Pbd,Pace->Pabcde", g, dRic)
            - es("Pbce,Pad->Pabcde", dg, Ric) - es("Pbc,Pade->Pabcde", g, dRic))
    gg = es("Pac,Pbd->Pabcd", g, g) - es("Pad,Pbc->Pabcd", g, g)
    dgg = (es("Pace,Pbd->Pabcde", dg, g) + es("Pac,Pbde->Pabcde", g, dg)
           - es("Pade,Pbc->Pabcde", dg, g) - es("Pad,Pbce->Pabcde", g, dg))
    dW = (dR - kn_d / (n - 2)
          + (es("Pe,Pabcd->Pabcde", dscal, gg) + es("P,Pabcde->Pabcde", scal, dgg))
          / ((n - 1) * (n - 2)))

    return CurvatureJet(
        g=g, ginv=ginv, christoffel=G2, riemann=R, ricci=Ric, scalar=scal, weyl=W,
        nabla_riemann=_covariant(R, dR, G2),
        nabla_weyl=_covariant(W, dW, G2),
        nabla_ricci=_covariant(Ric, dRic, G2),
        nabla_dt=-G2[:, 0],
    )


# -- algebraic sanity measures ----------------------------------------------


def _scale(T):
    return max(1.0, float(np.max(np.abs(T))))


def riemann_symmetry_residual(R):
    """Worst relative violation of the pair, exchange and first Bianchi symmetries."""
    pair = np.max(np.abs(R + R.swapaxes(1, 2)))
    pair2 = np.max(np.abs(R + R.swapaxes(3, 4)))
    exch = np.max(np.abs(R - R.transpose(0, 3, 4, 1, 2)))
    bianchi = np.max(np.abs(R + R.transpose(0, 1, 3, 4, 2) + R.transpose(0, 1, 4, 2, 3)))
    return float(max(pair, pair2, exch, bianchi)) / _scale(R)


def weyl_trace_residual(W, ginv):
    """Largest relative entry of any metric contraction of the Weyl tensor."""
    traces = [es("Pac,Pabcd->Pbd", ginv, W), es("Pab,Pabcd->Pcd", ginv, W),
              es("Pad,Pabcd->Pbc", ginv, W), es("Pbd,Pabcd->Pac", ginv, W)]
    return float(max(np.max(np.abs(t)) for t in traces)) / _scale(W)
