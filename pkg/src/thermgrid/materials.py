"""Material property records and the built-in library.

Thermal conductivities of the device materials follow the published device
table; density, specific heat and electrical conductivity are handbook
defaults shipped in ``data/materials.json`` and are meant to be overridden.
"""
from __future__ import annotations

import json
import math
from dataclasses import dataclass, asdict, fields
from functools import lru_cache
from importlib import resources
from pathlib import Path
from typing import Iterable, Iterator, Mapping

from .errors import InvalidProperty, UnknownMaterial

VOID = "ambient_void"


@dataclass(frozen=True)
class Material:
    """Isotropic, temperature-independent material.

    Units: ``k`` W/(m K), ``rho`` kg/m^3, ``cp`` J/(kg K), ``sigma`` S/m.
    """

    name: str
    k: float
    rho: float
    cp: float
    sigma: float = 0.0

    def __post_init__(self):
        if not isinstance(self.name, str) or not self.name:
            raise InvalidProperty("material name must be a non-empty string")
        for attr in ("k", "rho", "cp", "sigma"):
            value = getattr(self, attr)
            try:
                value = float(value)
            except (TypeError, ValueError):
                raise InvalidProperty(f"{self.name}.{attr} is not a number: {value!r}")
            if not math.isfinite(value):
                raise InvalidProperty(f"{self.name}.{attr} must be finite")
            object.__setattr__(self, attr, value)
        for attr in ("k", "rho", "cp"):
            if getattr(self, attr) <= 0:
                raise InvalidProperty(f"{self.name}.{attr} must be > 0, got {getattr(self, attr)}")
        if self.sigma < 0:
            raise InvalidProperty(f"{self.name}.sigma must be >= 0, got {self.sigma}")

    @property
    def rho_cp(self) -> float:
        return self.rho * self.cp

    def to_dict(self) -> dict:
        return asdict(self)

    @classmethod
    def from_dict(cls, data: Mapping) -> "Material":
        allowed = {f.name for f in fields(cls)}
        unknown = set(data) - allowed
        if unknown:
            raise InvalidProperty(f"unknown material field(s): {sorted(unknown)}")
        missing = {"name", "k", "rho", "cp"} - set(data)
        if missing:
            raise InvalidProperty(f"material record missing field(s): {sorted(missing)}")
        return cls(**data)


class MaterialDB(Mapping[str, Material]):
    """Ordered, immutable collection of materials unique by name."""

    def __init__(self, materials: Iterable[Material] = ()):
        records: dict[str, Material] = {}
        for mat in materials:
            if not isinstance(mat, Material):
                raise InvalidProperty(f"expected Material, got {type(mat).__name__}")
            if mat.name in records:
                raise InvalidProperty(f"duplicate material name {mat.name!r}")
            records[mat.name] = mat
        self._records = records

    def __getitem__(self, name: str) -> Material:
        return self.lookup(name)

    def __iter__(self) -> Iterator[str]:
        return iter(self._records)

    def __len__(self) -> int:
        return len(self._records)

    def __eq__(self, other):
        if not isinstance(other, MaterialDB):
            return NotImplemented
        return list(self._records.values()) == list(other._records.values())

    def __hash__(self):
        return hash(tuple(self._records.values()))

    def __repr__(self):
        return f"MaterialDB({list(self._records)})"

    def lookup(self, name: str) -> Material:
        try:
            return self._records[name]
        except (KeyError, TypeError):
            raise UnknownMaterial(f"unknown material {name!r}") from None

    def merge(self, user: Iterable[Material]) -> "MaterialDB":
        return merge_overrides(self, user)

    def to_list(self) -> list[dict]:
        return [m.to_dict() for m in self._records.values()]


def _read_library() -> dict:
    text = resources.files("thermgrid").joinpath("data/materials.json").read_text()
    return json.loads(text)


@lru_cache(maxsize=1)
def _builtin() -> MaterialDB:
    data = _read_library()
    return MaterialDB(Material.from_dict(rec) for rec in data["materials"])


def builtin_library() -> MaterialDB:
    """Return the built-in material database (shared, immutable)."""
    return _builtin()


def lookup(db: MaterialDB, name: str) -> Material:
    return db.lookup(name)


def merge_overrides(db: MaterialDB, user: Iterable[Material | Mapping]) -> MaterialDB:
    """Return a new DB where ``user`` records shadow same-named entries.

    New names are appended in the order given. Plain mappings are validated
    through :meth:`Material.from_dict`.
    """
    user = [u if isinstance(u, Material) else Material.from_dict(u) for u in user]
    if not user:
        return db
    records = dict(db.items())
    for mat in user:
        records[mat.name] = mat
    return MaterialDB(records.values())


def load_overrides(path: str | Path) -> list[Material]:
    """Read a JSON override file: a list of records or ``{"materials": [...]}``."""
    data = json.loads(Path(path).read_text())
    if isinstance(data, Mapping):
        extra = set(data) - {"materials", "version", "notes"}
        if extra:
            raise InvalidProperty(f"unknown top-level field(s): {sorted(extra)}")
        data = data.get("materials", [])
    return [Material.from_dict(rec) for rec in data]
