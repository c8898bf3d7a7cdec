"""Single-edge analysis of the threshold rounding: bivariate normal
orthant probabilities, separation probabilities, the sqrt(eps) law, and the
numerical worst-case approximation-ratio certificate.
"""

from __future__ import annotations

import csv
import io
import json
from dataclasses import dataclass, field

import numpy as np
from scipy.integrate import quad
from scipy.special import ndtr

from .errors import CardCspError
from .rounding import threshold

SDP_FLOOR = 1e-6  # configs below this payoff value are excluded from ratios


# -- bivariate normal ------------------------------------------------------

def _phi2_closed(t1, t2, rho):
    """Closed forms for rho = +-1 and infinite thresholds, else None."""
    if np.isinf(t1) or np.isinf(t2):
        if t1 == -np.inf or t2 == -np.inf:
            return 0.0
        if t1 == np.inf:
            return float(ndtr(t2))
        if t2 == np.inf:
            return float(ndtr(t1))
    if rho >= 1.0:
        return float(ndtr(min(t1, t2)))
    if rho <= -1.0:
        return float(max(0.0, ndtr(t1) + ndtr(t2) - 1.0))
    return None


def bvn_cdf(t1: float, t2: float, rho: float) -> float:
    """P(Z1 <= t1, Z2 <= t2) for standard bivariate normal, correlation rho.

    Adaptive quadrature of the correlation-path integral with the arcsine
    substitution, which makes the integrand analytic; absolute accuracy well
    below 1e-10.  rho = +-1 handled analytically.
    """
    if not -1.0 <= rho <= 1.0:
        raise CardCspError(f"correlation {rho} out of [-1, 1]")
    closed = _phi2_closed(t1, t2, rho)
    if closed is not None:
        return closed

    def integrand(theta):
        s = np.sin(theta)
        c2 = np.cos(theta) ** 2
        return np.exp(-(t1 * t1 - 2.0 * s * t1 * t2 + t2 * t2) / (2.0 * c2))

    val, _err = quad(integrand, 0.0, np.arcsin(rho), epsabs=1e-13, epsrel=1e-12)
    return float(ndtr(t1) * ndtr(t2) + val / (2.0 * np.pi))


_GL_NODES, _GL_WEIGHTS = np.polynomial.legendre.leggauss(48)


def bvn_cdf_grid(t1, t2, rho):
    """Vectorized bivariate normal CDF (fixed 48-node Gauss-Legendre on the
    arcsine path).  Cross-validated against the adaptive scalar version."""
    t1 = np.asarray(t1, dtype=float)
    t2 = np.asarray(t2, dtype=float)
    rho = np.asarray(rho, dtype=float)
    t1, t2, rho = np.broadcast_arrays(t1, t2, rho)
    upper = np.arcsin(np.clip(rho, -1.0, 1.0))
    theta = 0.5 * upper[..., None] * (_GL_NODES + 1.0)
    s = np.sin(theta)
    c2 = np.cos(theta) ** 2
    c2 = np.maximum(c2, 1e-300)
    a = np.where(np.isfinite(t1), t1, 0.0)[..., None]
    b = np.where(np.isfinite(t2), t2, 0.0)[..., None]
    integrand = np.exp(-(a * a - 2.0 * s * a * b + b * b) / (2.0 * c2))
    integral = 0.5 * upper * (integrand @ _GL_WEIGHTS)
    out = ndtr(t1) * ndtr(t2) + integral / (2.0 * np.pi)
    # finite-threshold formula is wrong at infinities; patch those entries
    inf_mask = ~np.isfinite(t1) | ~np.isfinite(t2)
    if np.any(inf_mask):
        out = np.where(t1 == -np.inf, 0.0, out)
        out = np.where(t2 == -np.inf, 0.0, out)
        out = np.where((t1 == np.inf) & np.isfinite(t2), ndtr(t2), out)
        out = np.where((t2 == np.inf) & np.isfinite(t1), ndtr(t1), out)
        out = np.where((t1 == np.inf) & (t2 == np.inf), 1.0, out)
    edge = np.abs(rho) >= 1.0
    if np.any(edge):
        plus = np.minimum(ndtr(t1), ndtr(t2))
        minus = np.maximum(0.0, ndtr(t1) + ndtr(t2) - 1.0)
        out = np.where(rho >= 1.0, plus, out)
        out = np.where(rho <= -1.0, minus, out)
    return np.clip(out, 0.0, 1.0)


# -- edge configurations ---------------------------------------------------

@dataclass(frozen=True)
class EdgeConfig:
    mu1: float
    mu2: float
    rhobar: float  # <wbar_i, wbar_j>

    @property
    def m(self):
        """Second moment E[x_i x_j]."""
        return (self.mu1 * self.mu2
                + self.rhobar * np.sqrt((1 - self.mu1**2) * (1 - self.mu2**2)))

    def pair_probabilities(self):
        """p_ab = (1 + a mu1 + b mu2 + ab m)/4 for a, b in {+1, -1}."""
        m = self.m
        return {(a, b): (1 + a * self.mu1 + b * self.mu2 + a * b * m) / 4
                for a in (1, -1) for b in (1, -1)}

    def is_valid(self, tol=1e-9):
        return (abs(self.rhobar) <= 1 + tol
                and all(p >= -tol for p in self.pair_probabilities().values()))


def config_m(mu1, mu2, rhobar):
    return mu1 * mu2 + rhobar * np.sqrt(
        np.clip((1 - mu1**2) * (1 - mu2**2), 0.0, None))


def config_valid_mask(mu1, mu2, rhobar, tol=1e-9):
    m = config_m(mu1, mu2, rhobar)
    ok = np.abs(rhobar) <= 1 + tol
    for a in (1, -1):
        for b in (1, -1):
            ok = ok & ((1 + a * mu1 + b * mu2 + a * b * m) / 4 >= -tol)
    return ok


def separation_prob(config: EdgeConfig) -> float:
    """Probability the rounding labels the two endpoints differently."""
    t1, t2 = threshold(config.mu1), threshold(config.mu2)
    return float(ndtr(t1) + ndtr(t2) - 2.0 * bvn_cdf(t1, t2, config.rhobar))


def separation_prob_grid(mu1, mu2, rhobar):
    t1, t2 = threshold(mu1), threshold(mu2)
    sep = ndtr(t1) + ndtr(t2) - 2.0 * bvn_cdf_grid(t1, t2, rhobar)
    return np.clip(sep, 0.0, 1.0)


def edge_sdp_value(kind: str, config: EdgeConfig) -> float:
    """Value of one payoff term under the SDP local distribution."""
    return float(edge_sdp_value_grid(kind, np.asarray(config.mu1),
                                     np.asarray(config.mu2),
                                     np.asarray(config.rhobar)))


def edge_sdp_value_grid(kind, mu1, mu2, rhobar):
    m = config_m(mu1, mu2, rhobar)
    if kind in ("cut", "maxcut-bisection", "mincut-bisection", "alpha-cut"):
        return (1.0 - m) / 2.0
    if kind in ("max2sat", "2sat"):
        # clause (+, +): unsatisfied only when both literals are false
        p_mm = (1.0 - mu1 - mu2 + m) / 4.0
        return 1.0 - p_mm
    raise CardCspError(f"unknown payoff kind {kind!r}")


def rounded_value_grid(kind, mu1, mu2, rhobar):
    """Expected payoff of the rounded labels for one term."""
    if kind in ("cut", "maxcut-bisection", "mincut-bisection", "alpha-cut"):
        return separation_prob_grid(mu1, mu2, rhobar)
    if kind in ("max2sat", "2sat"):
        t1, t2 = threshold(mu1), threshold(mu2)
        p_both_false = 1.0 - ndtr(t1) - ndtr(t2) + bvn_cdf_grid(t1, t2, rhobar)
        return np.clip(1.0 - p_both_false, 0.0, 1.0)
    raise CardCspError(f"unknown payoff kind {kind!r}")


# -- ratio certificate -----------------------------------------------------

@dataclass
class RatioCertificate:
    payoff_kind: str
    grid_resolution: int
    minimum_ratio: float
    argmin: EdgeConfig
    refinement_trace: list
    error_bar: float = 0.0

    def to_json(self):
        return json.dumps({
            "schema": "cardcsp.ratio_certificate/1",
            "payoff_kind": self.payoff_kind,
            "grid_resolution": self.grid_resolution,
            "minimum_ratio": self.minimum_ratio,
            "argmin": {"mu1": self.argmin.mu1, "mu2": self.argmin.mu2,
                       "rhobar": self.argmin.rhobar},
            "refinement_trace": self.refinement_trace,
            "error_bar": self.error_bar,
        }, indent=2)


def _ratio_on_grid(kind, mu1, mu2, rhobar):
    sdp = edge_sdp_value_grid(kind, mu1, mu2, rhobar)
    rounded = rounded_value_grid(kind, mu1, mu2, rhobar)
    valid = config_valid_mask(mu1, mu2, rhobar) & (sdp > SDP_FLOOR)
    ratio = np.where(valid, rounded / np.where(valid, sdp, 1.0), np.inf)
    return ratio, sdp, rounded, valid


def ratio_search(kind: str, resolution: int = 200, refinement_rounds: int = 3,
                 top_k: int = 24) -> RatioCertificate:
    """Worst ratio (rounded value / SDP value) over valid edge configs.

    Full grid sweep followed by local shrinking searches around the best
    cells; deterministic.
    """
    if resolution < 50:
        raise CardCspError("resolution must be at least 50 points per axis")
    mus = np.linspace(-1.0, 1.0, resolution)
    rhos = np.linspace(-1.0, 1.0, resolution)
    best = []  # (ratio, mu1, mu2, rho)
    M1, M2 = np.meshgrid(mus, mus, indexing="ij")
    for rho in rhos:
        ratio, _, _, _ = _ratio_on_grid(kind, M1, M2, np.full_like(M1, rho))
        flat = np.argsort(ratio, axis=None)[:max(1, top_k // 4)]
        for f in flat:
            i, j = np.unravel_index(f, ratio.shape)
            if np.isfinite(ratio[i, j]):
                best.append((float(ratio[i, j]), float(M1[i, j]),
                             float(M2[i, j]), float(rho)))
    best.sort()
    best = best[:top_k]
    trace = [{"stage": "grid", "min_ratio": best[0][0]}]
    step = np.array([mus[1] - mus[0], mus[1] - mus[0], rhos[1] - rhos[0]])
    local_res = 9
    lipschitz = 0.0
    for round_idx in range(refinement_rounds):
        new_best = list(best)
        for ratio0, m1, m2, rh in best:
            lo = np.maximum([m1, m2, rh] - step, -1.0)
            hi = np.minimum([m1, m2, rh] + step, 1.0)
            g1 = np.linspace(lo[0], hi[0], local_res)
            g2 = np.linspace(lo[1], hi[1], local_res)
            g3 = np.linspace(lo[2], hi[2], local_res)
            G1, G2, G3 = np.meshgrid(g1, g2, g3, indexing="ij")
            ratio, _, _, valid = _ratio_on_grid(kind, G1, G2, G3)
            finite = np.isfinite(ratio)
            if not finite.any():
                continue
            spread = ratio[finite]
            if spread.size > 1:
                lipschitz = max(lipschitz,
                                float((spread.max() - spread.min())
                                      / max(np.max(hi - lo), 1e-12)))
            f = np.argmin(ratio, axis=None)
            i, j, k = np.unravel_index(f, ratio.shape)
            new_best.append((float(ratio[i, j, k]), float(G1[i, j, k]),
                             float(G2[i, j, k]), float(G3[i, j, k])))
        new_best.sort()
        best = new_best[:top_k]
        step = step * 2.0 / (local_res - 1)
        trace.append({"stage": f"refine{round_idx}", "min_ratio": best[0][0]})
    ratio0, m1, m2, rh = best[0]
    # re-evaluate the minimizer with the adaptive-quadrature kernel
    argmin = EdgeConfig(m1, m2, rh)
    sdp = edge_sdp_value(kind, argmin)
    sep = (separation_prob(argmin) if kind not in ("max2sat", "2sat")
           else float(rounded_value_grid(kind, np.asarray(m1), np.asarray(m2),
                                         np.asarray(rh))))
    minimum = sep / sdp if sdp > SDP_FLOOR else ratio0
    error_bar = 1e-10 / max(sdp, SDP_FLOOR) + lipschitz * float(np.max(step))
    return RatioCertificate(payoff_kind=kind, grid_resolution=resolution,
                            minimum_ratio=float(minimum), argmin=argmin,
                            refinement_trace=trace, error_bar=float(error_bar))


def landscape_csv(kind: str, resolution: int = 60) -> str:
    """One row per grid cell: mu1, mu2, rhobar, sep, sdp, ratio."""
    mus = np.linspace(-1.0, 1.0, resolution)
    out = io.StringIO()
    writer = csv.writer(out)
    writer.writerow(["mu1", "mu2", "rhobar", "rounded", "sdp", "ratio"])
    M1, M2 = np.meshgrid(mus, mus, indexing="ij")
    for rho in mus:
        R = np.full_like(M1, rho)
        ratio, sdp, rounded, valid = _ratio_on_grid(kind, M1, M2, R)
        for i in range(resolution):
            for j in range(resolution):
                if not valid[i, j]:
                    continue
                writer.writerow([f"{M1[i, j]:.6f}", f"{M2[i, j]:.6f}",
                                 f"{rho:.6f}", f"{rounded[i, j]:.8f}",
                                 f"{sdp[i, j]:.8f}", f"{ratio[i, j]:.8f}"])
    return out.getvalue()


# -- sqrt(eps) law ---------------------------------------------------------

def worst_separation(eps: float, resolution: int = 200,
                     refinement_rounds: int = 4):
    """max separation probability over valid configs with cut SDP value <=
    eps.

    Separation is monotone non-increasing in rhobar at fixed biases, so the
    maximum sits on the boundary m = 1 - 2 eps; the search reduces to the
    (mu1, mu2) square with rhobar solved from the boundary equation.
    """
    if not 0 < eps < 0.5:
        raise CardCspError("eps must be in (0, 1/2)")
    m_target = 1.0 - 2.0 * eps

    def eval_grid(g1, g2):
        M1, M2 = np.meshgrid(g1, g2, indexing="ij")
        denom = np.sqrt(np.clip((1 - M1**2) * (1 - M2**2), 1e-300, None))
        rho = (m_target - M1 * M2) / denom
        feasible = rho <= 1.0 + 1e-12
        rho = np.clip(rho, -1.0, 1.0)
        valid = config_valid_mask(M1, M2, rho) & feasible
        sep = separation_prob_grid(M1, M2, rho)
        sep = np.where(valid, sep, -np.inf)
        return M1, M2, rho, sep

    g = np.linspace(-0.999, 0.999, resolution)
    M1, M2, rho, sep = eval_grid(g, g)
    f = np.argmax(sep, axis=None)
    i, j = np.unravel_index(f, sep.shape)
    best = (float(sep[i, j]), float(M1[i, j]), float(M2[i, j]), float(rho[i, j]))
    step = g[1] - g[0]
    for _ in range(refinement_rounds):
        _, m1, m2, _ = best[0], best[1], best[2], best[3]
        g1 = np.linspace(max(-0.999999, m1 - step), min(0.999999, m1 + step), 17)
        g2 = np.linspace(max(-0.999999, m2 - step), min(0.999999, m2 + step), 17)
        M1, M2, rho, sep = eval_grid(g1, g2)
        f = np.argmax(sep, axis=None)
        i, j = np.unravel_index(f, sep.shape)
        if sep[i, j] > best[0]:
            best = (float(sep[i, j]), float(M1[i, j]), float(M2[i, j]),
                    float(rho[i, j]))
        step = step / 4.0
    return best[0], EdgeConfig(best[1], best[2], best[3])


def sqrt_eps_curve(eps_values, resolution: int = 200):
    """Worst separation per eps, plus the fitted power-law exponent."""
    rows = []
    for eps in eps_values:
        worst, argmax = worst_separation(eps, resolution=resolution)
        rows.append({"eps": float(eps), "worst_separation": worst,
                     "argmax": {"mu1": argmax.mu1, "mu2": argmax.mu2,
                                "rhobar": argmax.rhobar}})
    xs = np.log([r["eps"] for r in rows])
    ys = np.log([max(r["worst_separation"], 1e-300) for r in rows])
    beta, log_c = np.polyfit(xs, ys, 1)
    return {"rows": rows, "beta": float(beta), "prefactor": float(np.exp(log_c))}
