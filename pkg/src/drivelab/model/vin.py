"""VIN (17-char vehicle identification number) check-digit handling."""

from __future__ import annotations

import random
import string

_TRANSLIT = {
    "A": 1, "B": 2, "C": 3, "D": 4, "E": 5, "F": 6, "G": 7, "H": 8,
    "J": 1, "K": 2, "L": 3, "M": 4, "N": 5, "P": 7, "R": 9,
    "S": 2, "T": 3, "U": 4, "V": 5, "W": 6, "X": 7, "Y": 8, "Z": 9,
}
_TRANSLIT.update({str(d): d for d in range(10)})

_WEIGHTS = (8, 7, 6, 5, 4, 3, 2, 10, 0, 9, 8, 7, 6, 5, 4, 3, 2)

VIN_ALPHABET = "".join(c for c in string.digits + string.ascii_uppercase if c not in "IOQ")


def compute_check_digit(vin: str) -> str:
    total = sum(_TRANSLIT[c] * w for c, w in zip(vin, _WEIGHTS))
    rem = total % 11
    return "X" if rem == 10 else str(rem)


def is_valid_vin(vin: str) -> bool:
    """True iff 17 chars, no I/O/Q, and position 9 matches the check digit."""
    if len(vin) != 17:
        return False
    if any(c not in _TRANSLIT for c in vin):
        return False
    return vin[8] == compute_check_digit(vin)


def random_vin(rng: random.Random) -> str:
    """Generate a check-digit-valid VIN (for simulated vehicles)."""
    chars = [rng.choice(VIN_ALPHABET) for _ in range(17)]
    chars[8] = "0"
    chars[8] = compute_check_digit("".join(chars))
    return "".join(chars)


# model-year code at position 10 (1980/2010 30-year cycle; we pick the
# modern cycle, which is all a desk-scale simulator meets)
_YEAR_CODES = "ABCDEFGHJKLMNPRSTVWXY123456789"

_REGIONS = {
    "1": "North America", "2": "North America", "3": "North America",
    "4": "North America", "5": "North America",
    "6": "Oceania", "7": "Oceania",
    "8": "South America", "9": "South America",
    "J": "Asia", "K": "Asia", "L": "Asia", "M": "Asia", "N": "Asia",
    "P": "Asia", "R": "Asia",
    "S": "Europe", "T": "Europe", "U": "Europe", "V": "Europe",
    "W": "Europe", "X": "Europe", "Y": "Europe", "Z": "Europe",
}


def decode_vin(vin: str) -> dict:
    """Best-effort decode of a valid VIN: model year and build region."""
    if not is_valid_vin(vin):
        raise ValueError(f"invalid VIN {vin!r}")
    year = None
    code = vin[9]
    if code in _YEAR_CODES:
        year = 2010 + _YEAR_CODES.index(code)
        if year > 2030:
            year -= 30
    return {
        "wmi": vin[:3],
        "region": _REGIONS.get(vin[0], "unknown"),
        "modelYear": year,
    }
