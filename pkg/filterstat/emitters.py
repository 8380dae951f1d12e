"""
Emitter models: the resonantly driven two-level system and the six-configuration neutral quantum dot.

Frames: the two-level system is written in the frame rotating at the (resonant) laser frequency and
the quantum dot in the frame rotating at the exciton energy omega_X. Filter centers are therefore
measured from the laser line or the exciton line respectively.
"""

import logging
from dataclasses import dataclass, field
from typing import List, Tuple

import numpy as np

from filterstat.config import QDParams, RFParams
from filterstat.operators import HERMITIAN_ATOL, as_operator, dagger, is_hermitian, projector
from filterstat.units import HBAR_UEV_NS, unit_convert

logger = logging.getLogger(__name__)

__all__ = [
    "Channel",
    "EmitterModel",
    "HBAR_UEV_NS",
    "QD_BASIS",
    "RF_BASIS",
    "ladder_model",
    "neutral_qd",
    "resonance_fluorescence",
    "unit_convert",
]

RF_BASIS = ("e", "g")
QD_BASIS = ("G", "BX1", "BX2", "DX1", "DX2", "XX")


@dataclass(frozen=True)
class Channel:
    """One Lindblad channel rate * D[operator]."""

    operator: np.ndarray
    rate: float
    label: str


@dataclass(frozen=True)
class EmitterModel:
    """Hamiltonian, dissipation channels and emission operator E^- of one emitter."""

    hamiltonian: np.ndarray
    channels: Tuple[Channel, ...]
    emission_minus: np.ndarray
    labels: Tuple[str, ...]
    energy_unit: str = "ueV"
    name: str = "emitter"
    metadata: dict = field(default_factory=dict)

    def __post_init__(self):
        hamiltonian = as_operator(self.hamiltonian)
        if as_operator(self.emission_minus).shape != hamiltonian.shape:
            raise ValueError(f"{self.name}: emission operator shape does not match the Hamiltonian")
        for channel in self.channels:
            if channel.rate < 0:
                raise ValueError(f"{self.name}: channel '{channel.label}' has negative rate {channel.rate}")
            if as_operator(channel.operator).shape != hamiltonian.shape:
                raise ValueError(f"{self.name}: channel '{channel.label}' has mismatched dimension")
        if len(self.labels) != hamiltonian.shape[0]:
            raise ValueError(f"{self.name}: {len(self.labels)} labels for dimension {hamiltonian.shape[0]}")
        # matrix elements in ueV can be 1e3 and more, so the tolerance follows the model's own scale
        if not is_hermitian(hamiltonian, HERMITIAN_ATOL * self.rate_scale):
            raise ValueError(f"{self.name}: Hamiltonian is not hermitian")

    @property
    def dim(self) -> int:
        return int(self.hamiltonian.shape[0])

    @property
    def emission_plus(self) -> np.ndarray:
        return dagger(self.emission_minus)

    @property
    def rate_scale(self) -> float:
        """Largest channel rate or Hamiltonian matrix element, whichever is bigger; scales absolute tolerances."""
        rates = [c.rate for c in self.channels] + [float(np.max(np.abs(as_operator(self.hamiltonian))))]
        return max(rates) or 1.0

    def nonzero_rates(self) -> List[float]:
        """All positive channel rates and nonzero Hamiltonian couplings."""
        rates = [c.rate for c in self.channels if c.rate > 0]
        couplings = np.abs(self.hamiltonian[np.abs(self.hamiltonian) > 0])
        return rates + [float(x) for x in couplings]


def resonance_fluorescence(params: RFParams) -> EmitterModel:
    """
    Two-level emitter driven on resonance: H = Omega_R (sigma+ + sigma-).

    Basis (e, g); sigma- = |g><e|. Channels: radiative decay sigma- at gamma_sp and pure dephasing
    sigma_z at gamma_ph / 2.
    """
    sigma_minus = projector(2, 1, 0)
    sigma_plus = dagger(sigma_minus)
    sigma_z = np.diag([1.0, -1.0]).astype(complex)

    hamiltonian = params.omega_R * (sigma_plus + sigma_minus)
    channels = (
        Channel(sigma_minus, params.gamma_sp, "spontaneous emission"),
        Channel(sigma_z, params.gamma_ph / 2.0, "pure dephasing"),
    )
    logger.debug(f"Resonance fluorescence model: {params}")
    return EmitterModel(
        hamiltonian=hamiltonian,
        channels=channels,
        emission_minus=sigma_minus,
        labels=RF_BASIS,
        name="resonance_fluorescence",
        metadata=params.model_dump(),
    )


def _qd_ket_bra(bra_from: str, ket_to: str) -> np.ndarray:
    """|ket_to><bra_from| in the QD basis."""
    return projector(len(QD_BASIS), QD_BASIS.index(ket_to), QD_BASIS.index(bra_from))


def neutral_qd(params: QDParams) -> EmitterModel:
    """
    Neutral quantum dot with configurations G, BX1, BX2, DX1, DX2, XX.

    H = omega_X N_tot - chi |XX><XX| with omega_X = 0 (frame of the exciton line). The dark states
    couple to the bright ones only through electron and hole spin flips; the incoherent pump injects
    electron-hole pairs, filling the biexciton from bright and dark excitons alike.
    """
    n_tot = np.diag([0.0, 1.0, 1.0, 1.0, 1.0, 2.0]).astype(complex)
    hamiltonian = -params.chi * _qd_ket_bra("XX", "XX")

    channels: List[Channel] = [
        Channel(_qd_ket_bra("BX1", "G"), params.gamma_sp, "BX1 -> G"),
        Channel(_qd_ket_bra("BX2", "G"), params.gamma_sp, "BX2 -> G"),
        Channel(_qd_ket_bra("XX", "BX2"), params.gamma_sp, "XX -> BX2"),
        Channel(_qd_ket_bra("XX", "BX1"), params.gamma_sp, "XX -> BX1"),
    ]

    electron_flips = (("BX1", "DX1"), ("BX2", "DX2"))
    hole_flips = (("BX1", "DX2"), ("BX2", "DX1"))
    for (a, b), rate, carrier in [(pair, params.gamma_S_e, "electron") for pair in electron_flips] + [
        (pair, params.gamma_S_h, "hole") for pair in hole_flips
    ]:
        channels.append(Channel(_qd_ket_bra(a, b), rate, f"{carrier} flip {a} -> {b}"))
        channels.append(Channel(_qd_ket_bra(b, a), rate, f"{carrier} flip {b} -> {a}"))

    channels.append(Channel(n_tot, params.gamma_ph, "exciton dephasing"))

    pair_injection = (("BX1", "BX2"), ("BX2", "BX1"), ("DX1", "DX2"), ("DX2", "DX1"))
    for created, partner in pair_injection:
        operator = _qd_ket_bra("G", created) + _qd_ket_bra(partner, "XX")
        channels.append(Channel(operator, params.pump_P, f"pump G -> {created}, {partner} -> XX"))

    emission_minus = (
        _qd_ket_bra("BX1", "G") + _qd_ket_bra("BX2", "G") + _qd_ket_bra("XX", "BX2") + _qd_ket_bra("XX", "BX1")
    )
    logger.debug(f"Neutral QD model: {params}")
    return EmitterModel(
        hamiltonian=hamiltonian,
        channels=tuple(channels),
        emission_minus=emission_minus,
        labels=QD_BASIS,
        name="neutral_qd",
        metadata=params.model_dump(),
    )


def ladder_model(rate: float, pump: float) -> EmitterModel:
    """
    Three-level ladder |0>, |1>, |2> with harmonic-oscillator matrix elements, decay at `rate` and
    incoherent pumping a^dagger at `pump`. With E^- = a its steady state is a truncated thermal state.
    """
    annihilation = np.diag([1.0, np.sqrt(2.0)], k=1).astype(complex)
    channels = (
        Channel(annihilation, rate, "decay"),
        Channel(dagger(annihilation), pump, "pump"),
    )
    return EmitterModel(
        hamiltonian=np.zeros((3, 3), dtype=complex),
        channels=channels,
        emission_minus=annihilation,
        labels=("0", "1", "2"),
        name="ladder",
    )
