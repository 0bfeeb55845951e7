"""Model/config files.

A config is TOML with top-level keys ``K``, ``alpha`` and ``p`` (row-major
list of rows). Numbers are read as exact decimals; strings such as
``"1/3"`` are read as exact fractions. Optional run settings may sit next to
the model (``n``, ``T``, ``seed``, ``trim``) and in ``[spectral]`` (``tol``,
``max_iter``, ``k``) and ``[experiment]`` (``regimes``, ``n_grid``,
``replications``) tables.
"""

import sys
from decimal import Decimal
from fractions import Fraction
from pathlib import Path

if sys.version_info >= (3, 11):
    import tomllib
else:
    import tomli as tomllib

from .errors import ConfigError
from .model import ClusterModel, validate_model


def exact(value) -> Fraction:
    if isinstance(value, bool):
        raise ConfigError(f"expected a number, got {value!r}")
    if isinstance(value, (int, Decimal, Fraction)):
        return Fraction(value)
    if isinstance(value, float):
        return Fraction(Decimal(repr(value)))
    if isinstance(value, str):
        try:
            return Fraction(value.strip())
        except (ValueError, ZeroDivisionError) as exc:
            raise ConfigError(f"cannot parse number {value!r}") from exc
    raise ConfigError(f"expected a number, got {value!r}")


def model_from_mapping(data: dict) -> ClusterModel:
    try:
        alpha = [exact(a) for a in data["alpha"]]
        p = [[exact(v) for v in row] for row in data["p"]]
    except KeyError as exc:
        raise ConfigError(f"missing key {exc.args[0]!r}") from exc
    except TypeError as exc:
        raise ConfigError("alpha must be an array and p an array of arrays") from exc
    K = int(data.get("K", len(alpha)))
    if len(alpha) != K or len(p) != K or any(len(row) != K for row in p):
        raise ConfigError(f"K={K} does not match the shapes of alpha and p")
    for i, row in enumerate(p):
        if abs(sum(row) - 1) > Fraction(1, 10**9):
            raise ConfigError(f"row {i + 1} of p sums to {float(sum(row))!r}, not 1")
    return validate_model([float(a) for a in alpha], [[float(v) for v in row] for row in p])


def load_config(path) -> dict:
    try:
        text = Path(path).read_text()
    except OSError as exc:
        raise ConfigError(f"cannot read config {path}: {exc}") from exc
    try:
        return tomllib.loads(text, parse_float=Decimal)
    except tomllib.TOMLDecodeError as exc:
        raise ConfigError(f"{path}: {exc}") from exc


def parse_vector(text: str) -> list[Fraction]:
    return [exact(tok) for tok in text.replace(" ", "").split(",") if tok]


def parse_matrix(text: str) -> list[list[Fraction]]:
    return [parse_vector(row) for row in text.split(";") if row.strip()]


def format_number(x) -> str:
    if isinstance(x, Fraction):
        return str(x) if x.denominator != 1 else str(x.numerator)
    return repr(x)
