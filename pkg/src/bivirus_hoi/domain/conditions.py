"""Sufficient conditions on DFE stability, tristability, boundary equilibria and coexistence.

Every check reports the scalars that decided it; node indices in evidence
are 1-based.
"""
from __future__ import annotations

from typing import List, Optional, Sequence

import numpy as np
from numpy.typing import ArrayLike

from bivirus_hoi.config import settings
from bivirus_hoi.domain.model_core import (
    BivirusModel,
    VirusParams,
    hoi_support,
    r_matrix,
    single_virus_jacobian,
)
from bivirus_hoi.domain.spectral import spectral_abscissa, spectral_radius
from bivirus_hoi.schemas.equilibrium import (
    CoexistenceRegime,
    ConditionCheck,
    ConditionReport,
    EquilibriumKind,
    EquilibriumRecord,
    Stability,
)
from bivirus_hoi.utils.logging import get_logger

logger = get_logger(__name__)


def _scaled_pairwise(v: VirusParams) -> np.ndarray:
    return v.beta_pair * v.a / v.delta[:, None]


def _dfe_block(v: VirusParams) -> np.ndarray:
    return -np.diag(v.delta) + v.beta_pair * v.a


def _all_hold(checks: Sequence[ConditionCheck]) -> bool:
    return all(check.holds is True for check in checks)


def check_dfe_local(m: BivirusModel) -> ConditionReport:
    """DFE locally stable when rho(beta_pair D^-1 A) < 1 for both viruses"""
    checks = []
    for k, v in enumerate(m.virus, start=1):
        rho = spectral_radius(_scaled_pairwise(v))
        checks.append(ConditionCheck(name=f"virus_{k}.spectral_radius", holds=rho < 1, evidence={"rho": rho}))
    return ConditionReport(name="dfe_local", holds=_all_hold(checks), checks=checks)


def check_dfe_global(m: BivirusModel) -> ConditionReport:
    """DFE globally exponentially stable when rho(D^-1 (beta_pair A + beta_hoi R)) < 1 for both viruses"""
    checks = []
    for k, v in enumerate(m.virus, start=1):
        rho = spectral_radius((v.beta_pair * v.a + v.beta_hoi * r_matrix(v)) / v.delta[:, None])
        checks.append(ConditionCheck(name=f"virus_{k}.spectral_radius", holds=rho < 1, evidence={"rho": rho}))
    return ConditionReport(name="dfe_global", holds=_all_hold(checks), checks=checks)


def check_tristability(m: BivirusModel) -> ConditionReport:
    """Subcritical pairwise spreading plus strong enough higher-order spreading on its support.

    For each virus: a) rho(beta_pair D^-1 A) < 1; b) over nodes i heading a
    hyperedge, min of beta_pair/delta_i (A 1_B)_i + beta_hoi/(2 delta_i) 1_B^T B_i 1_B exceeds 2.
    """
    checks: List[ConditionCheck] = []
    applicable = True
    for k, v in enumerate(m.virus, start=1):
        rho = spectral_radius(_scaled_pairwise(v))
        checks.append(ConditionCheck(name=f"virus_{k}.spectral_radius", holds=rho < 1, evidence={"rho": rho}))

        support = hoi_support(v)
        if not support.any():
            applicable = False
            checks.append(ConditionCheck(
                name=f"virus_{k}.hoi_threshold", holds=None, evidence={},
                note="no higher-order interactions: condition not applicable",
            ))
            continue

        ones_b = support.ones_b.astype(np.float64)
        pairwise = v.beta_pair / v.delta * (v.a @ ones_b)
        quadratic = v.beta_hoi / (2.0 * v.delta) * np.einsum("ijl,j,l->i", v.b, ones_b, ones_b)
        values = (pairwise + quadratic)[support.nodes]
        minimum = float(np.min(values))
        argmin_nodes = [int(i) + 1 for i, value in zip(support.nodes, values) if value - minimum <= 1e-12]
        checks.append(ConditionCheck(
            name=f"virus_{k}.hoi_threshold",
            holds=minimum > 2,
            evidence={
                "min_value": minimum,
                "argmin_node": argmin_nodes[0],
                "argmin_nodes": argmin_nodes,
                "node_values": {str(int(i) + 1): float(value) for i, value in zip(support.nodes, values)},
            },
        ))

    return ConditionReport(name="tristability", holds=applicable and _all_hold(checks), checks=checks)


def _invasion_abscissa(invader: VirusParams, resident: Optional[ArrayLike]) -> float:
    """s(-D + beta_pair (I - X_resident) A) of the invading virus"""
    if resident is None:
        return spectral_abscissa(_dfe_block(invader))
    susceptible = 1.0 - np.asarray(resident, dtype=np.float64)
    return spectral_abscissa(-np.diag(invader.delta) + invader.beta_pair * susceptible[:, None] * invader.a)


def check_boundary_instability(
    m: BivirusModel,
    bar_x1: Optional[ArrayLike],
    bar_x2: Optional[ArrayLike],
) -> ConditionReport:
    """Invasion abscissas of each virus at the other virus' boundary equilibrium.

    ``s(-D1 + beta1 (I - X2) A1) > 0`` makes (0, bar_x2) unstable and
    ``s(-D2 + beta2 (I - X1) A2) > 0`` makes (bar_x1, 0) unstable.
    """
    s_into_v2 = _invasion_abscissa(m.virus[0], bar_x2)
    s_into_v1 = _invasion_abscissa(m.virus[1], bar_x1)
    band = settings.zero_band
    checks = [
        ConditionCheck(
            name="boundary_v2.invaded_by_virus_1",
            holds=s_into_v2 > band,
            evidence={"s": s_into_v2},
            note=None if bar_x2 is not None else "bar_x2 absent: DFE block used",
        ),
        ConditionCheck(
            name="boundary_v1.invaded_by_virus_2",
            holds=s_into_v1 > band,
            evidence={"s": s_into_v1},
            note=None if bar_x1 is not None else "bar_x1 absent: DFE block used",
        ),
    ]
    return ConditionReport(name="boundary_instability", holds=_all_hold(checks), checks=checks)


def check_boundary_existence(m: BivirusModel) -> ConditionReport:
    """Both boundary equilibria exist when rho(beta_pair D^-1 A) > 1 for both viruses"""
    checks = []
    for k, v in enumerate(m.virus, start=1):
        rho = spectral_radius(_scaled_pairwise(v))
        checks.append(ConditionCheck(name=f"virus_{k}.spectral_radius", holds=rho > 1, evidence={"rho": rho}))
    return ConditionReport(name="boundary_existence", holds=_all_hold(checks), checks=checks)


def check_dfe_unique_classic(m: BivirusModel) -> ConditionReport:
    """Without higher-order spreading and with rho <= 1 for both viruses the DFE is the only equilibrium"""
    classic = all(v.beta_hoi == 0 or not np.any(v.b) for v in m.virus)
    checks = []
    for k, v in enumerate(m.virus, start=1):
        rho = spectral_radius(_scaled_pairwise(v))
        checks.append(ConditionCheck(
            name=f"virus_{k}.spectral_radius",
            holds=rho <= 1 if classic else None,
            evidence={"rho": rho},
            note=None if classic else "higher-order interactions present: not applicable",
        ))
    if not classic:
        return ConditionReport(name="dfe_unique_classic", holds=None, checks=checks)
    return ConditionReport(name="dfe_unique_classic", holds=_all_hold(checks), checks=checks)


def boundary_self_certificate(v: VirusParams, x_bar: ArrayLike) -> ConditionCheck:
    """Own-virus block at a boundary equilibrium is Hurwitz if J x_bar << 0 with x_bar >> 0"""
    x_bar = np.asarray(x_bar, dtype=np.float64)
    product = single_virus_jacobian(v, x_bar) @ x_bar
    max_entry = float(np.max(product))
    return ConditionCheck(
        name="boundary.self_certificate",
        holds=bool(np.all(x_bar > 0) and max_entry < 0),
        evidence={"max_entry": max_entry},
    )


def _has_unstable_coexistence(records: Sequence[EquilibriumRecord], band: float) -> bool:
    return any(r.kind == EquilibriumKind.COEXISTENCE and r.s_jacobian >= -band for r in records)


def check_coexistence_hypotheses(m: BivirusModel, records: Sequence[EquilibriumRecord]) -> ConditionReport:
    """Decide which coexistence regime applies and verify its claim against ``records``.

    mutual_invasion: both DFE blocks and both invasion abscissas positive,
    some coexistence equilibrium exists. bistable_endemic: both DFE blocks
    positive and both boundary equilibria stable, some coexistence
    equilibrium is not locally exponentially stable. tristable: as
    ``check_tristability``, same claim.
    """
    band = settings.zero_band
    v1, v2 = m.virus
    dfe_s = [spectral_abscissa(_dfe_block(v)) for v in m.virus]
    dfe_unstable = all(s > band for s in dfe_s)

    firsts = [r for r in records if r.kind == EquilibriumKind.BOUNDARY_V1]
    seconds = [r for r in records if r.kind == EquilibriumKind.BOUNDARY_V2]

    mutual = False
    bistable = False
    invasion_evidence = []
    for r1 in firsts:
        for r2 in seconds:
            into_v2 = _invasion_abscissa(v1, r2.x2)
            into_v1 = _invasion_abscissa(v2, r1.x1)
            invasion_evidence.append({
                "boundary_v1": r1.label, "boundary_v2": r2.label,
                "s_invade_boundary_v2": into_v2, "s_invade_boundary_v1": into_v1,
            })
            if dfe_unstable and into_v2 > band and into_v1 > band:
                mutual = True
            if dfe_unstable and r1.stability == Stability.STABLE and r2.stability == Stability.STABLE:
                bistable = True

    tristability = check_tristability(m)
    checks = [
        ConditionCheck(
            name="dfe_blocks_unstable", holds=dfe_unstable,
            evidence={"s_virus_1": dfe_s[0], "s_virus_2": dfe_s[1]},
        ),
        ConditionCheck(
            name=CoexistenceRegime.MUTUAL_INVASION.value, holds=mutual,
            evidence={"pairs": invasion_evidence},
        ),
        ConditionCheck(
            name=CoexistenceRegime.BISTABLE_ENDEMIC.value, holds=bistable,
            evidence={"stable_boundaries": [r.label for r in firsts + seconds if r.stability == Stability.STABLE]},
        ),
        ConditionCheck(
            name=CoexistenceRegime.TRISTABLE.value, holds=bool(tristability.holds),
            evidence={c.name: c.evidence for c in tristability.checks},
        ),
    ]

    coexistence = [r for r in records if r.kind == EquilibriumKind.COEXISTENCE]
    if mutual:
        regime = CoexistenceRegime.MUTUAL_INVASION
        claim = "at least one coexistence equilibrium exists"
        verified = bool(coexistence)
    elif bistable or tristability.holds:
        regime = CoexistenceRegime.BISTABLE_ENDEMIC if bistable else CoexistenceRegime.TRISTABLE
        claim = "at least one coexistence equilibrium is not locally exponentially stable"
        verified = _has_unstable_coexistence(records, band)
    else:
        regime, claim, verified = None, None, None

    if regime in (CoexistenceRegime.BISTABLE_ENDEMIC, CoexistenceRegime.TRISTABLE):
        unstable_coexistence = [r.label for r in coexistence if r.s_jacobian >= -band]
        unstable_boundaries = [r.label for r in firsts + seconds if r.stability == Stability.UNSTABLE]
        note = None
        if not unstable_coexistence and unstable_boundaries:
            note = "no coexistence equilibrium found; unstable boundary equilibria lie between the basins"
        checks.append(ConditionCheck(
            name="separating_equilibria",
            holds=bool(unstable_coexistence or unstable_boundaries),
            evidence={"unstable_coexistence": unstable_coexistence, "unstable_boundaries": unstable_boundaries},
            note=note,
        ))

    if verified is False:
        logger.warning(f"Regime {regime.value} holds but its claim was not found among computed equilibria")
    return ConditionReport(
        name="coexistence",
        holds=regime is not None,
        checks=checks,
        regime=regime,
        claim=claim,
        claim_verified=verified,
    )
