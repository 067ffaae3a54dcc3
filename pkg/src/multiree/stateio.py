"""State files and the command-line state grammar.

A state file is a JSON object::

    {"dims": [2, 2, 2], "amplitudes": [[re, im], ...]}        # pure
    {"dims": [2, 2], "density": [[[re, im], ...], ...]}       # mixed

The grammar accepted by ``--state`` is ``epr``, ``ghz[:alpha]``, ``w``,
``psieff:e,f`` or ``file:path``; named states may carry an ``@2x2x2``
suffix to choose the party structure.
"""

from __future__ import annotations

import json
import math
from pathlib import Path

import numpy as np

from .states import PartyStructure, PureState, QuantumState, make_named_state


class StateFileError(ValueError):
    pass


def _complex_entry(value, where: str) -> complex:
    if (not isinstance(value, list) or len(value) != 2
            or not all(isinstance(x, (int, float)) and not isinstance(x, bool) for x in value)):
        raise StateFileError(f"{where}: expected a [re, im] pair of numbers, got {value!r}")
    z = complex(float(value[0]), float(value[1]))
    if not (math.isfinite(z.real) and math.isfinite(z.imag)):
        raise StateFileError(f"{where}: non-finite number")
    return z


def parse_state_document(doc, source: str = "<state>") -> PureState | QuantumState:
    if not isinstance(doc, dict):
        raise StateFileError(f"{source}: top level must be a JSON object")
    if "dims" not in doc:
        raise StateFileError(f"{source}: missing field 'dims'")
    dims = doc["dims"]
    if (not isinstance(dims, list) or not dims
            or not all(isinstance(d, int) and not isinstance(d, bool) for d in dims)):
        raise StateFileError(f"{source}: field 'dims' must be a nonempty list of integers")
    try:
        structure = PartyStructure(tuple(dims))
    except ValueError as exc:
        raise StateFileError(f"{source}: field 'dims': {exc}") from None
    has_amps, has_rho = "amplitudes" in doc, "density" in doc
    if has_amps == has_rho:
        raise StateFileError(f"{source}: exactly one of 'amplitudes' or 'density' is required")
    d = structure.dimension

    if has_amps:
        amps = doc["amplitudes"]
        if not isinstance(amps, list) or len(amps) != d:
            got = len(amps) if isinstance(amps, list) else type(amps).__name__
            raise StateFileError(f"{source}: field 'amplitudes' must have {d} entries, got {got}")
        vec = np.array([_complex_entry(a, f"{source}: amplitudes[{i}]") for i, a in enumerate(amps)])
        try:
            return PureState(structure, vec)
        except ValueError as exc:
            raise StateFileError(f"{source}: field 'amplitudes': {exc}") from None

    rows = doc["density"]
    if not isinstance(rows, list) or len(rows) != d:
        raise StateFileError(f"{source}: field 'density' must have {d} rows")
    mat = np.empty((d, d), dtype=complex)
    for i, row in enumerate(rows):
        if not isinstance(row, list) or len(row) != d:
            raise StateFileError(f"{source}: density[{i}] must have {d} entries")
        for j, entry in enumerate(row):
            mat[i, j] = _complex_entry(entry, f"{source}: density[{i}][{j}]")
    try:
        return QuantumState(structure, mat)
    except ValueError as exc:
        raise StateFileError(f"{source}: field 'density': {exc}") from None


def load_state_file(path) -> PureState | QuantumState:
    path = Path(path)
    try:
        text = path.read_text()
    except OSError as exc:
        raise StateFileError(f"{path}: cannot read file ({exc.strerror})") from None
    try:
        doc = json.loads(text)
    except json.JSONDecodeError as exc:
        raise StateFileError(f"{path}: line {exc.lineno} column {exc.colno}: {exc.msg}") from None
    return parse_state_document(doc, str(path))


def state_to_document(state: PureState | QuantumState) -> dict:
    dims = list(state.structure.dims)
    if isinstance(state, PureState):
        return {"dims": dims, "amplitudes": [[z.real, z.imag] for z in state.amplitudes.tolist()]}
    return {"dims": dims,
            "density": [[[z.real, z.imag] for z in row] for row in state.matrix.tolist()]}


def _parse_dims(text: str) -> tuple[int, ...]:
    try:
        return tuple(int(x) for x in text.lower().split("x"))
    except ValueError:
        raise StateFileError(f"bad party structure {text!r}; expected e.g. 2x2x2") from None


def parse_state_spec(spec: str) -> PureState | QuantumState:
    """Resolve a ``--state`` argument into a state."""
    spec = spec.strip()
    if spec.startswith("file:"):
        return load_state_file(spec[len("file:"):])
    body, _, dims_text = spec.partition("@")
    name, _, args = body.partition(":")
    name = name.strip().lower()
    dims = _parse_dims(dims_text) if dims_text else None
    try:
        params = [float(a) for a in args.split(",")] if args else []
    except ValueError:
        raise StateFileError(f"bad parameters in state spec {spec!r}") from None
    expected = {"epr": (0,), "w": (0,), "ghz": (0, 1), "psieff": (2,)}
    if name not in expected:
        raise StateFileError(
            f"unknown state {name!r}; use epr, ghz:<alpha>, w, psieff:<e>,<f> or file:<path>"
        )
    if len(params) not in expected[name]:
        raise StateFileError(f"state {name!r} takes {expected[name]} parameters, got {len(params)}")
    try:
        return make_named_state(name, dims, *params)
    except ValueError as exc:
        raise StateFileError(f"state spec {spec!r}: {exc}") from None
