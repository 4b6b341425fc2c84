"""Parser and canonical writer for ``.ifp`` experiment descriptions.

Grammar::

    file    := section*
    section := IDENT '{' entry* '}'
    entry   := IDENT '=' value
    value   := NUMBER [UNIT] | IDENT

``#`` starts a comment running to the end of the line; line breaks carry no
meaning. Dimensional quantities must carry their unit, dimensionless ones
must not. Keys that are not given take the defaults below.

Example::

    beam     { w_n = 10 um  w_Gd = 1000 um }
    absorber { preset = gd157  z_mag_sq = 0.5 }
"""

from __future__ import annotations

import math
import re
from dataclasses import dataclass, field, fields, replace
from typing import Any, Callable

from .amplitudes import PRESETS, CrossSections, InteractionAmplitudes, from_cross_sections
from .errors import AmplitudeOverflow
from .interferometer import NetworkSpec
from .joint_state import BeamGeometry
from .montecarlo import TrialConfig
from .wavepacket import Grid

ANGSTROM = 1e-10
SECTIONS = ("beam", "absorber", "network", "montecarlo", "wavepacket")
UNITS = {"um": "length", "barn": "area", "invA": "wavenumber", "us": "time", "mps": "speed"}


class ParseError(Exception):
    def __init__(self, line: int, column: int, message: str, offending_token: str = ""):
        super().__init__(f"{line}:{column}: {message}")
        self.line = line
        self.column = column
        self.message = message
        self.offending_token = offending_token


@dataclass(frozen=True)
class AbsorberConfig:
    preset: str | None = "gd157"
    sigma_abs: float | None = None  # barn
    sigma_scat: float | None = None  # barn
    wavenumber: float = 2 * math.pi / 1.8  # 1/Angstrom
    z_mag_sq: float = 0.5
    inelastic_split: float = 1.0

    def cross_sections(self) -> CrossSections:
        k = self.wavenumber / ANGSTROM
        if self.preset is not None:
            return replace(PRESETS[self.preset], wavenumber_k=k)
        return CrossSections(self.sigma_abs, self.sigma_scat, k)

    def amplitudes(self) -> InteractionAmplitudes:
        return from_cross_sections(self.cross_sections(), self.z_mag_sq, self.inelastic_split)


@dataclass(frozen=True)
class MonteCarloConfig:
    n_trials: int = 100_000
    shutter_delay: float = 0.0  # us
    atom_speed: float = 500.0  # m/s
    dump_trials: bool = False


@dataclass(frozen=True)
class WavepacketConfig:
    x_min: float = -600.0  # um
    x_max: float = 600.0
    n_samples: int = 32768
    edge_fraction: float = 0.1
    window_center: float = 0.0

    @property
    def grid(self) -> Grid:
        return Grid(self.x_min, self.x_max, self.n_samples)


@dataclass(frozen=True)
class ExperimentConfig:
    geometry: BeamGeometry = field(default_factory=BeamGeometry)
    absorber: AbsorberConfig = field(default_factory=AbsorberConfig)
    network: NetworkSpec = field(default_factory=NetworkSpec)
    montecarlo: MonteCarloConfig = field(default_factory=MonteCarloConfig)
    wavepacket: WavepacketConfig = field(default_factory=WavepacketConfig)

    def amplitudes(self) -> InteractionAmplitudes:
        return self.absorber.amplitudes()

    def trial_config(self, seed: int, n_trials: int | None = None) -> TrialConfig:
        mc = self.montecarlo
        return TrialConfig(
            geometry=self.geometry,
            amps=self.amplitudes(),
            network=self.network,
            n_trials=mc.n_trials if n_trials is None else n_trials,
            seed=seed,
            shutter_delay=mc.shutter_delay,
            atom_speed=mc.atom_speed,
        )


# --- key table ------------------------------------------------------------

@dataclass(frozen=True)
class Key:
    attr: str
    kind: str  # "real", "int", "bool", "ident"
    unit: str | None = None


KEYS: dict[str, dict[str, Key]] = {
    "beam": {
        "w_n": Key("w_n", "real", "um"),
        "w_Gd": Key("w_Gd", "real", "um"),
    },
    "absorber": {
        "preset": Key("preset", "ident"),
        "sigma_abs": Key("sigma_abs", "real", "barn"),
        "sigma_scat": Key("sigma_scat", "real", "barn"),
        "wavenumber": Key("wavenumber", "real", "invA"),
        "z_mag_sq": Key("z_mag_sq", "real"),
        "inelastic_split": Key("inelastic_split", "real"),
    },
    "network": {
        "bs1_reflectivity": Key("bs1_reflectivity", "real"),
        "bs2_reflectivity": Key("bs2_reflectivity", "real"),
        "phase_I": Key("extra_phase_I", "real"),
        "phase_II": Key("extra_phase_II", "real"),
    },
    "montecarlo": {
        "n_trials": Key("n_trials", "int"),
        "shutter_delay": Key("shutter_delay", "real", "us"),
        "atom_speed": Key("atom_speed", "real", "mps"),
        "dump_trials": Key("dump_trials", "bool"),
    },
    "wavepacket": {
        "x_min": Key("x_min", "real", "um"),
        "x_max": Key("x_max", "real", "um"),
        "n_samples": Key("n_samples", "int"),
        "edge_fraction": Key("edge_fraction", "real"),
        "window_center": Key("window_center", "real", "um"),
    },
}

_SECTION_ATTR = {
    "beam": "geometry",
    "absorber": "absorber",
    "network": "network",
    "montecarlo": "montecarlo",
    "wavepacket": "wavepacket",
}


# --- tokenizer ------------------------------------------------------------

@dataclass(frozen=True)
class Token:
    kind: str  # IDENT NUMBER LBRACE RBRACE EQUALS EOF
    text: str
    line: int
    column: int


_TOKEN_RE = re.compile(
    r"""
    (?P<ws>[ \t\r\n]+)
  | (?P<comment>\#[^\n]*)
  | (?P<NUMBER>[+-]?(?:\d+\.?\d*|\.\d+)(?:[eE][+-]?\d+)?)
  | (?P<IDENT>[A-Za-z_][A-Za-z0-9_]*)
  | (?P<LBRACE>\{)
  | (?P<RBRACE>\})
  | (?P<EQUALS>=)
    """,
    re.VERBOSE,
)


def tokenize(source: str) -> list[Token]:
    tokens = []
    pos, line, line_start = 0, 1, 0
    while pos < len(source):
        m = _TOKEN_RE.match(source, pos)
        if m is None:
            raise ParseError(line, pos - line_start + 1, f"unexpected character {source[pos]!r}", source[pos])
        kind = m.lastgroup
        if kind not in ("ws", "comment"):
            tokens.append(Token(kind, m.group(), line, pos - line_start + 1))
        nl = m.group().count("\n")
        if nl:
            line += nl
            line_start = m.start() + m.group().rindex("\n") + 1
        pos = m.end()
    tokens.append(Token("EOF", "", line, pos - line_start + 1))
    return tokens


# --- parser ---------------------------------------------------------------

class _Parser:
    def __init__(self, source: str):
        self.source = source
        self.tokens = tokenize(source)
        self.i = 0

    def peek(self, offset: int = 0) -> Token:
        return self.tokens[min(self.i + offset, len(self.tokens) - 1)]

    def next(self) -> Token:
        tok = self.peek()
        self.i += 1
        return tok

    def error(self, tok: Token, message: str) -> ParseError:
        line, col = tok.line, tok.column
        if tok.kind == "EOF":
            # Point at the last character of the source, never past it.
            line, col = self._last_position()
        return ParseError(line, col, message, tok.text)

    def _last_position(self) -> tuple[int, int]:
        text = self.source.rstrip("\r\n") or " "
        lines = text.split("\n")
        return len(lines), max(len(lines[-1].rstrip("\r")), 1)

    def expect(self, kind: str, what: str) -> Token:
        tok = self.next()
        if tok.kind != kind:
            raise self.error(tok, f"expected {what}, found {tok.text or 'end of input'!r}")
        return tok

    def parse_file(self) -> dict[str, tuple[Token, dict[str, tuple[Token, Any]]]]:
        sections: dict[str, tuple[Token, dict]] = {}
        while self.peek().kind != "EOF":
            name = self.expect("IDENT", "a section name")
            if name.text not in KEYS:
                raise self.error(name, f"unknown section {name.text!r}")
            if name.text in sections:
                raise self.error(name, f"duplicate section {name.text!r}")
            self.expect("LBRACE", "'{'")
            sections[name.text] = (name, self.parse_entries(name.text))
            self.expect("RBRACE", "'}'")
        return sections

    def parse_entries(self, section: str) -> dict[str, tuple[Token, Any]]:
        entries: dict[str, tuple[Token, Any]] = {}
        while self.peek().kind == "IDENT":
            key_tok = self.next()
            spec = KEYS[section].get(key_tok.text)
            if spec is None:
                raise self.error(key_tok, f"unknown key {key_tok.text!r} in section {section!r}")
            if key_tok.text in entries:
                raise self.error(key_tok, f"duplicate key {key_tok.text!r}")
            self.expect("EQUALS", f"'=' after {key_tok.text!r}")
            entries[key_tok.text] = (key_tok, self.parse_value(key_tok, spec))
        return entries

    def parse_value(self, key_tok: Token, spec: Key) -> Any:
        tok = self.next()
        key = key_tok.text
        if spec.kind == "bool":
            if tok.kind == "IDENT" and tok.text in ("true", "false"):
                return tok.text == "true"
            raise self.error(tok, f"{key} expects true or false")
        if spec.kind == "ident":
            if tok.kind == "IDENT" and tok.text not in UNITS:
                return tok.text
            raise self.error(tok, f"{key} expects an identifier")
        if tok.kind != "NUMBER":
            raise self.error(tok, f"{key} expects a number")
        if spec.kind == "int":
            if not re.fullmatch(r"[+-]?\d+", tok.text):
                raise self.error(tok, f"{key} expects an integer")
            value: Any = int(tok.text)
        else:
            value = float(tok.text)
            if not math.isfinite(value):
                raise self.error(tok, f"{key} is not finite")
        unit_tok = self.peek()
        has_unit = unit_tok.kind == "IDENT" and unit_tok.text in UNITS
        if spec.unit is None:
            if has_unit:
                raise self.error(unit_tok, f"{key} is dimensionless and takes no unit")
            return value
        if not has_unit:
            raise self.error(tok, f"{key} requires a unit ({spec.unit})")
        self.next()
        if unit_tok.text != spec.unit:
            raise self.error(unit_tok, f"{key} takes unit {spec.unit!r}, not {unit_tok.text!r}")
        return value


_SECTION_CLASS = {
    "beam": BeamGeometry,
    "absorber": AbsorberConfig,
    "network": NetworkSpec,
    "montecarlo": MonteCarloConfig,
    "wavepacket": WavepacketConfig,
}


def _defaults(section: str) -> dict[str, Any]:
    return {f.name: f.default for f in fields(_SECTION_CLASS[section])}


def _check(v: dict[str, dict[str, Any]], fail: Callable[[str, str, str], None]) -> None:
    """Semantic checks on merged values; ``fail`` raises at the key's location."""
    b = v["beam"]
    if not b["w_n"] > 0:
        fail("beam", "w_n", "w_n must be positive")
    if b["w_n"] > b["w_Gd"]:
        fail("beam", "w_n", "w_n exceeds w_Gd")

    a = v["absorber"]
    if a["preset"] is not None and a["preset"] not in PRESETS:
        fail("absorber", "preset", f"unknown preset {a['preset']!r}")
    if a["preset"] is None:
        if a["sigma_abs"] is None or not a["sigma_abs"] > 0:
            fail("absorber", "sigma_abs", "sigma_abs must be given and positive")
        if a["sigma_scat"] is None or not a["sigma_scat"] >= 0:
            fail("absorber", "sigma_scat", "sigma_scat must be given and non-negative")
    if not a["wavenumber"] > 0:
        fail("absorber", "wavenumber", "wavenumber must be positive")
    if not 0 <= a["z_mag_sq"] <= 1:
        fail("absorber", "z_mag_sq", "z_mag_sq must lie in [0, 1]")
    if not 0 <= a["inelastic_split"] <= 1:
        fail("absorber", "inelastic_split", "inelastic_split must lie in [0, 1]")
    try:
        AbsorberConfig(**a).amplitudes()
    except AmplitudeOverflow:
        fail("absorber", "z_mag_sq", "z_mag_sq leaves no room for the scattering probability")

    for key in ("bs1_reflectivity", "bs2_reflectivity"):
        if not 0 <= v["network"][key] <= 1:
            fail("network", key, f"{key} must lie in [0, 1]")

    mc = v["montecarlo"]
    if mc["n_trials"] < 1:
        fail("montecarlo", "n_trials", "n_trials must be at least 1")
    for key in ("shutter_delay", "atom_speed"):
        if mc[key] < 0:
            fail("montecarlo", key, f"{key} must be non-negative")

    w = v["wavepacket"]
    n = w["n_samples"]
    if n < 64 or n & (n - 1):
        fail("wavepacket", "n_samples", "n_samples must be a power of two >= 64")
    if not w["x_max"] > w["x_min"]:
        fail("wavepacket", "x_max", "x_max must exceed x_min")
    if not 0 <= w["edge_fraction"] < 0.5:
        fail("wavepacket", "edge_fraction", "edge_fraction must lie in [0, 0.5)")


def parse(source: str) -> ExperimentConfig:
    """Parse ``source`` into a validated config; raises ParseError."""
    p = _Parser(source)
    sections = p.parse_file()

    def location(section: str, key: str) -> Token:
        if section in sections:
            sec_tok, entries = sections[section]
            return entries[key][0] if key in entries else sec_tok
        return p.tokens[0]

    def fail(section: str, key: str, message: str) -> None:
        tok = location(section, key)
        raise ParseError(tok.line, tok.column, message, tok.text)

    merged = {}
    for name in SECTIONS:
        merged[name] = _defaults(name)
        _, entries = sections.get(name, (None, {}))
        merged[name].update({KEYS[name][k].attr: val for k, (_, val) in entries.items()})

    absorber_keys = sections.get("absorber", (None, {}))[1]
    for key in ("sigma_abs", "sigma_scat"):
        if key in absorber_keys:
            if "preset" in absorber_keys:
                fail("absorber", key, f"{key} conflicts with preset")
            merged["absorber"]["preset"] = None

    _check(merged, fail)
    return ExperimentConfig(
        geometry=BeamGeometry(**merged["beam"]),
        absorber=AbsorberConfig(**merged["absorber"]),
        network=NetworkSpec(**merged["network"]),
        montecarlo=MonteCarloConfig(**merged["montecarlo"]),
        wavepacket=WavepacketConfig(**merged["wavepacket"]),
    )


def load(path) -> ExperimentConfig:
    with open(path, encoding="utf-8", newline="") as fh:
        return parse(fh.read())


# --- canonical writer -----------------------------------------------------

def _format_value(value: Any, spec: Key) -> str:
    if spec.kind == "bool":
        return "true" if value else "false"
    if spec.kind in ("ident", "int"):
        return str(value)
    text = repr(float(value))
    return f"{text} {spec.unit}" if spec.unit else text


def serialize(cfg: ExperimentConfig) -> str:
    """Canonical text: sections in fixed order, keys sorted, defaults explicit."""
    lines = []
    for section in SECTIONS:
        obj = getattr(cfg, _SECTION_ATTR[section])
        lines.append(f"{section} {{")
        for key in sorted(KEYS[section]):
            spec = KEYS[section][key]
            value = getattr(obj, spec.attr)
            if value is None:
                continue
            lines.append(f"  {key} = {_format_value(value, spec)}")
        lines.append("}")
    return "\n".join(lines) + "\n"
