"""Unit conversions between energies (ueV), times (ns) and rates (1/ns)."""

HBAR_UEV_NS = 0.6582119569  # ueV * ns

_ALIASES = {
    "uev": "ueV",
    "μev": "ueV",
    "µev": "ueV",
    "ns": "ns",
    "ns^-1": "1/ns",
    "ns-1": "1/ns",
    "1/ns": "1/ns",
    "ns⁻¹": "1/ns",
}


def _canonical(unit: str) -> str:
    key = unit.strip().lower()
    if key not in _ALIASES:
        raise ValueError(f"Unknown unit '{unit}'. Expected one of: ueV, ns, 1/ns")
    return _ALIASES[key]


def unit_convert(value: float, from_unit: str, to_unit: str) -> float:
    """
    Convert between energy (ueV), time (ns) and rate (1/ns) with hbar = 0.6582119569 ueV*ns.

    A time converts to an energy as the decay rate hbar/tau (a 1 ns lifetime is 0.658 ueV).
    Zero converts to zero in every direction; a zero time means the process is absent.
    """
    source = _canonical(from_unit)
    target = _canonical(to_unit)
    if source == target or value == 0:
        return 0.0 if value == 0 else float(value)

    # express everything as an energy first
    if source == "ueV":
        energy = float(value)
    elif source == "ns":
        energy = HBAR_UEV_NS / value
    else:
        energy = HBAR_UEV_NS * value

    if target == "ueV":
        return energy
    if target == "ns":
        return HBAR_UEV_NS / energy
    return energy / HBAR_UEV_NS
