"""Run configuration: one JSON file drives every CLI command.

Layout (all sections optional unless a command needs them)::

    {
      "field":     {"source": "param ...; f1 = ...;"} | {"file": "sys.field"},
      "schedule":  {"rho": 1.0, "T": 60.0, "epsilon": 0.1},
      "integrator":{"abs_tol": 1e-10, "rel_tol": 1e-10, "max_step": 1.0},
      "cycle":     {"guess": [1.3, 0.0], "nodes": 1024, "anchor": [1.0, 0.0],
                    "settle_time": 60.0},
      "pipeline":  {"frame_method": "parallel_transport", "rho": 1.0,
                    "Lambda": null, "N_target": 40, "horizon": 40,
                    "seed": 1234, "grid": 1000},
      "sweep":     {"T_min": 60.0, "T_max": 61.0, "points": 201,
                    "iterates": 150, "burn_in": 30},
      "lyapunov":  {"iterates": 400, "burn_in": 50},
      "output":    "runs/demo"
    }

"pipeline.Lambda": null means use the flow-matched hyperbolicity
eps*sigma/(2L|lambda1|) of the configured schedule; a number overrides the
knob directly (the usual mode for map-level studies).
"""

import json
import os
from dataclasses import dataclass, field

from .dsl import parse_field
from .dynsys import IntegratorConfig, PulseSchedule


class ConfigError(ValueError):
    pass


@dataclass
class RunConfig:
    raw: dict
    path: str = ""
    field_source: str = ""
    output: str = "runs/out"

    @classmethod
    def load(cls, path):
        if not os.path.exists(path):
            raise ConfigError("config file not found: %s" % path)
        try:
            with open(path) as fh:
                raw = json.load(fh)
        except json.JSONDecodeError as e:
            raise ConfigError("config is not valid JSON: %s" % e)
        return cls.from_dict(raw, path)

    @classmethod
    def from_dict(cls, raw, path=""):
        cfg = cls(raw=raw, path=path)
        fld = raw.get("field")
        if fld:
            if "source" in fld:
                cfg.field_source = fld["source"]
            elif "file" in fld:
                fpath = fld["file"]
                if path:
                    fpath = os.path.join(os.path.dirname(os.path.abspath(path)),
                                         fpath)
                if not os.path.exists(fpath):
                    raise ConfigError("field file not found: %s" % fld["file"])
                with open(fpath) as fh:
                    cfg.field_source = fh.read()
            else:
                raise ConfigError("field section needs 'source' or 'file'")
        cfg.output = raw.get("output", "runs/out")
        cfg.validate()
        return cfg

    def validate(self):
        sch = self.raw.get("schedule")
        if sch is not None:
            if not (0.0 < sch.get("rho", 1.0)):
                raise ConfigError("schedule.rho must be positive")
            if "T" in sch and not sch.get("rho", 1.0) < sch["T"]:
                raise ConfigError("schedule needs rho < T")
            if sch.get("epsilon", 0.0) < 0:
                raise ConfigError("schedule.epsilon must be >= 0")
        integ = self.raw.get("integrator", {})
        for key in ("abs_tol", "rel_tol", "max_step"):
            if key in integ and integ[key] <= 0:
                raise ConfigError("integrator.%s must be positive" % key)
        sw = self.raw.get("sweep")
        if sw is not None and "T_min" in sw and "T_max" in sw:
            if sw["T_max"] <= sw["T_min"]:
                raise ConfigError("sweep needs T_min < T_max")

    # -- section builders --------------------------------------------------
    def program(self):
        if not self.field_source:
            raise ConfigError("no field program configured")
        return parse_field(self.field_source)

    def schedule(self, T=None):
        sch = self.raw.get("schedule")
        if sch is None:
            raise ConfigError("no schedule configured")
        T_val = T if T is not None else sch.get("T")
        if T_val is None:
            raise ConfigError("schedule.T missing")
        return PulseSchedule(rho=float(sch.get("rho", 1.0)), T=float(T_val),
                             epsilon=float(sch.get("epsilon", 0.0)))

    def integrator(self):
        integ = self.raw.get("integrator", {})
        return IntegratorConfig(
            abs_tol=float(integ.get("abs_tol", 1e-10)),
            rel_tol=float(integ.get("rel_tol", 1e-10)),
            max_step=float(integ.get("max_step", 1.0)),
        )

    def section(self, name):
        return dict(self.raw.get(name, {}))
