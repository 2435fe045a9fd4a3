"""Run configuration: plain-text INI with [domain], [materials], [problem],
[solver] and [output] sections, echoed verbatim into every JSON summary."""

from __future__ import annotations

import configparser
from dataclasses import dataclass, field, asdict
from typing import Dict, List, Optional

import numpy as np

from .grid import (ConfigurationError, MaterialField, MeridianGrid,
                   build_grid, constant_materials, materials_from_csv)
from .nehari import SolverOptions

DEFAULTS: Dict[str, Dict[str, str]] = {
    "domain": {"r_max": "1.0", "z_min": "0.0", "z_max": "1.0",
               "n_r": "32", "n_z": "32", "shape": "rectangle"},
    "materials": {"a_mu": "1.0", "b_mu": "1.0", "a_v": "1.0",
                  "a_gamma": "1.0", "csv": ""},
    "problem": {"p": "6.0", "lambda": "0.0", "lambda_grid": "",
                "flavor": "isotropic", "nu": "1", "eps": "0.5",
                "z0": "", "mu_sequence": "", "k": "6"},
    "solver": {"tol": "1e-8", "max_iter": "2000", "starts": "5", "seed": "0"},
    "output": {"directory": "out", "formats": "csv,json,png"},
}


@dataclass
class RunConfig:
    """Fully resolved configuration (defaults filled in)."""

    domain: Dict[str, str]
    materials: Dict[str, str]
    problem: Dict[str, str]
    solver: Dict[str, str]
    output: Dict[str, str]

    def echo(self) -> Dict[str, Dict[str, str]]:
        return asdict(self)

    # typed accessors ------------------------------------------------------
    @property
    def p(self) -> float:
        return float(self.problem["p"])

    @property
    def lam(self) -> float:
        return float(self.problem["lambda"])

    @property
    def seed(self) -> int:
        return int(self.solver["seed"])

    @property
    def tol(self) -> float:
        return float(self.solver["tol"])

    def solver_options(self) -> SolverOptions:
        return SolverOptions(tol=self.tol,
                             max_iter=int(self.solver["max_iter"]),
                             starts=int(self.solver["starts"]),
                             seed=self.seed)

    def build_grid(self) -> MeridianGrid:
        d = self.domain
        return build_grid(float(d["r_max"]), float(d["z_min"]),
                          float(d["z_max"]), int(d["n_r"]), int(d["n_z"]),
                          d.get("shape", "rectangle"))

    def build_materials(self, grid: MeridianGrid) -> MaterialField:
        m = self.materials
        if m.get("csv"):
            return materials_from_csv(grid, m["csv"])
        return constant_materials(grid, float(m["a_mu"]), float(m["b_mu"]),
                                  float(m["a_v"]), float(m["a_gamma"]))

    def lambda_grid(self) -> List[float]:
        """Either an explicit comma list or `lin:a:b:n` for n equispaced
        values from a to b inclusive."""
        spec = self.problem.get("lambda_grid", "").strip()
        if not spec:
            raise ConfigurationError("problem.lambda_grid is required for "
                                     "sweep runs")
        if spec.startswith("lin:"):
            try:
                _, a, b, n = spec.split(":")
                return list(np.linspace(float(a), float(b), int(n)))
            except ValueError as exc:
                raise ConfigurationError(
                    f"bad lambda_grid spec {spec!r}; expected lin:a:b:n"
                ) from exc
        try:
            return [float(x) for x in spec.split(",") if x.strip()]
        except ValueError as exc:
            raise ConfigurationError(
                f"bad lambda_grid value in {spec!r}") from exc

    def mu_sequence(self) -> List[float]:
        spec = self.problem.get("mu_sequence", "").strip()
        if not spec:
            raise ConfigurationError("problem.mu_sequence is required for "
                                     "continuity runs")
        try:
            return [float(x) for x in spec.split(",") if x.strip()]
        except ValueError as exc:
            raise ConfigurationError(
                f"bad mu_sequence value in {spec!r}") from exc


def load_config(path: Optional[str]) -> RunConfig:
    """Read a config file on top of the documented defaults; a missing path
    yields pure defaults."""
    parser = configparser.ConfigParser()
    parser.read_dict(DEFAULTS)
    if path is not None:
        read = parser.read(path)
        if not read:
            raise ConfigurationError(f"config file {path!r} not readable")
    known = set(DEFAULTS)
    for section in parser.sections():
        if section not in known:
            raise ConfigurationError(f"unknown config section [{section}]")
        for key in parser[section]:
            if key not in DEFAULTS[section]:
                raise ConfigurationError(
                    f"unknown key {key!r} in section [{section}]")
    return RunConfig(**{s: dict(parser[s]) for s in known})
