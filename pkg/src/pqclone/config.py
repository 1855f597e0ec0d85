"""Run configuration: state files, JSON configs, and lossless round-trips.

A states file is hand-writable plain text: comments start with '#', the
first data line is the dimension, and every following data line is one
state as interleaved real/imaginary amplitude pairs. A run config is a
JSON document of plain values; ``RunConfig`` mirrors it field for field
so that parse(serialize(c)) == c exactly.
"""

from __future__ import annotations

import json
from dataclasses import asdict, dataclass, field
from pathlib import Path

import numpy as np

from . import entangle, pqcm, signalling
from .errors import ConfigError
from .qcore import Ket

FORMATS = ("csv", "json")


def parse_states_text(text: str, source: str = "<string>") -> list[Ket]:
    """Parse a states file; errors carry the offending line number."""
    dim: int | None = None
    states: list[Ket] = []
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        tokens = line.replace(",", " ").split()
        if dim is None:
            if len(tokens) != 1:
                raise ConfigError(
                    f"{source}:{lineno}: expected a single dimension, got {raw!r}"
                )
            try:
                dim = int(tokens[0])
            except ValueError:
                raise ConfigError(
                    f"{source}:{lineno}: dimension is not an integer: {tokens[0]!r}"
                ) from None
            if dim < 1:
                raise ConfigError(f"{source}:{lineno}: dimension must be positive")
            continue
        if len(tokens) != 2 * dim:
            raise ConfigError(
                f"{source}:{lineno}: expected {2 * dim} numbers "
                f"(re/im pairs for dimension {dim}), got {len(tokens)}"
            )
        try:
            values = [float(t) for t in tokens]
        except ValueError as exc:
            raise ConfigError(f"{source}:{lineno}: {exc}") from None
        amps = np.array(values[0::2]) + 1j * np.array(values[1::2])
        norm = np.linalg.norm(amps)
        if norm < 1e-12:
            raise ConfigError(f"{source}:{lineno}: state has zero norm")
        states.append(Ket(amps / norm))
    if dim is None:
        raise ConfigError(f"{source}: no dimension line found")
    if not states:
        raise ConfigError(f"{source}: no states found")
    return states


def load_states(path: str | Path) -> list[Ket]:
    path = Path(path)
    try:
        text = path.read_text()
    except OSError as exc:
        raise ConfigError(f"cannot read states file {path}: {exc}") from None
    return parse_states_text(text, source=str(path))


def _complex_to_pair(z: complex) -> list[float]:
    return [float(np.real(z)), float(np.imag(z))]


def ket_to_pairs(state: Ket) -> list[list[float]]:
    return [_complex_to_pair(z) for z in state.amplitudes]


def pairs_to_ket(pairs) -> Ket:
    try:
        arr = np.array([complex(re, im) for re, im in pairs])
    except (TypeError, ValueError) as exc:
        raise ConfigError(f"malformed amplitude pairs: {exc}") from None
    return Ket.normalized(arr)


@dataclass(frozen=True)
class RunConfig:
    """Plain-data mirror of one signal-test configuration."""

    mu: int
    trials: int
    pairs_per_bit: int
    seed: int
    machine: dict
    a2: dict = field(default_factory=lambda: {"kind": "fourier"})
    bob_states: list | None = None  # list of [re, im] pair lists
    states_file: str | None = None
    message_bits: int = 64
    format: str = "json"
    out: str | None = None

    def __post_init__(self):
        if (self.bob_states is None) == (self.states_file is None):
            raise ConfigError("provide exactly one of bob_states or states_file")
        if self.format not in FORMATS:
            raise ConfigError(f"format must be one of {FORMATS}, got {self.format!r}")
        if self.message_bits < 1:
            raise ConfigError("message_bits must be at least 1")

    def to_dict(self) -> dict:
        data = asdict(self)
        return {k: v for k, v in data.items() if v is not None}

    @classmethod
    def from_dict(cls, data: dict) -> "RunConfig":
        known = {f for f in cls.__dataclass_fields__}
        unknown = set(data) - known
        if unknown:
            raise ConfigError(f"unknown config keys: {sorted(unknown)}")
        missing = {"mu", "trials", "pairs_per_bit", "seed", "machine"} - set(data)
        if missing:
            raise ConfigError(f"missing config keys: {sorted(missing)}")
        return cls(**data)

    def dumps(self) -> str:
        return json.dumps(self.to_dict(), indent=2, sort_keys=True) + "\n"

    @classmethod
    def loads(cls, text: str) -> "RunConfig":
        try:
            data = json.loads(text)
        except json.JSONDecodeError as exc:
            raise ConfigError(f"config is not valid JSON: {exc}") from None
        return cls.from_dict(data)

    @classmethod
    def load(cls, path: str | Path) -> "RunConfig":
        path = Path(path)
        try:
            text = path.read_text()
        except OSError as exc:
            raise ConfigError(f"cannot read config {path}: {exc}") from None
        return cls.loads(text)


def _resolve_states(config: RunConfig, base_dir: Path) -> tuple[Ket, ...]:
    if config.states_file is not None:
        path = Path(config.states_file)
        if not path.is_absolute():
            path = base_dir / path
        return tuple(load_states(path))
    return tuple(pairs_to_ket(p) for p in config.bob_states)


def _resolve_a2(config: RunConfig, bob_states: tuple) -> entangle.AliceBasis:
    spec = config.a2
    kind = spec.get("kind")
    n = len(bob_states)
    if kind == "fourier":
        return entangle.AliceBasis.fourier(n)
    if kind == "vectors":
        vectors = tuple(pairs_to_ket(v) for v in spec["vectors"])
        return entangle.AliceBasis(vectors, "A2")
    if kind == "target":
        target = pairs_to_ket(spec["state"])
        return entangle.target_to_basis(target, bob_states)
    raise ConfigError(f"unknown a2 kind {kind!r}")


def _resolve_machine(config: RunConfig, bob_states: tuple):
    spec = config.machine
    kind = spec.get("kind")
    n = len(bob_states)
    if kind == "illegal":
        labels = spec.get("clonable_labels")
        if labels is None:
            labels = list(range(1, n + 2))
        coefficients = {}
        for key, entry in (spec.get("coefficients") or {}).items():
            c = np.array([complex(re, im) for re, im in entry["c"]])
            d = complex(entry["d"][0], entry["d"][1])
            coefficients[int(key)] = (c, d)
        return pqcm.IllegalClonerSpec(
            clonable_labels=tuple(labels),
            copies=config.mu,
            total_labels=2 * n,
            coefficients=coefficients or None,
        )
    if kind == "legal":
        if "gammas" in spec:
            gammas = [float(g) for g in spec["gammas"]]
        else:
            gamma = spec.get("uniform_gamma", "max")
            if gamma == "max":
                gamma = pqcm.max_uniform_gamma(bob_states, config.mu)
                gamma *= float(spec.get("gamma_scale", 1.0))
            gammas = [float(gamma)] * n
        return pqcm.construct_machine(bob_states, config.mu, gammas)
    raise ConfigError(f"unknown machine kind {kind!r}")


def build_protocol(
    config: RunConfig, base_dir: str | Path = "."
) -> signalling.ProtocolConfig:
    """Turn a plain-data run config into a ready-to-run protocol config."""
    bob_states = _resolve_states(config, Path(base_dir))
    a2_basis = _resolve_a2(config, bob_states)
    machine = _resolve_machine(config, bob_states)
    return signalling.ProtocolConfig(
        bob_states=bob_states,
        a2_basis=a2_basis,
        mu=config.mu,
        trials=config.trials,
        pairs_per_bit=config.pairs_per_bit,
        machine=machine,
        seed=config.seed,
    )
