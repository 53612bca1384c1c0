"""Experiment configuration: serialization, hashing and fail-fast validation.

A configuration fixes the model, interaction, weights, lattice, integrator
and suite selection.  It round-trips through JSON bit-exactly (keys are
sorted, values canonical), and its SHA-256 hash is embedded in every run
artifact so results trace back to their inputs.
"""

import dataclasses
import hashlib
import json
from dataclasses import dataclass, field

from .errors import HypothesisViolation, InvalidInputError
from .geometry import WeightScheme, default_weight_scheme, validate_weights
from .interactions import FAMILY_NAMES, InteractionSpec, validate_hypotheses
from .models import MODEL_NAMES

__all__ = ["ExperimentConfig", "SHIPPED_CONFIGS", "load_config"]

SUITE_NAMES = (
    "lyapunov",
    "control",
    "kolmogorov",
    "tail_mass",
    "box_consistency",
    "continuity",
    "ergodic",
    "martingale",
    "tightness",
    "product_tv",
)


@dataclass
class ExperimentConfig:
    model: str = "heisenberg"
    lam: float = 1.0
    interaction: dict = field(
        default_factory=lambda: {"family": "tanh", "C": 1.0, "r": 1,
                                 "boundary_mode": "zero-pad"}
    )
    weights: dict = field(
        default_factory=lambda: {"delta": 0.5, "K": 1.0, "horizon": 50}
    )
    lattice: dict = field(default_factory=lambda: {"d": 1, "boxes": [1, 2, 3]})
    integrator: dict = field(
        default_factory=lambda: {"h": 1e-3, "T": 1.0, "record_stride": 1}
    )
    seed: int = 0
    suites: list = field(default_factory=lambda: list(SUITE_NAMES))
    suite_params: dict = field(default_factory=dict)

    def interaction_spec(self):
        return InteractionSpec(**self.interaction)

    def weight_scheme(self):
        return default_weight_scheme(
            d=self.lattice["d"],
            r=self.interaction.get("r", 1),
            delta=self.weights.get("delta", 0.5),
            K=self.weights.get("K", 1.0),
            horizon=self.weights.get("horizon", 50),
        )

    def to_dict(self):
        return dataclasses.asdict(self)

    def to_json(self):
        return json.dumps(self.to_dict(), sort_keys=True, indent=2)

    @classmethod
    def from_dict(cls, rec):
        known = {f.name for f in dataclasses.fields(cls)}
        extra = set(rec) - known
        if extra:
            raise InvalidInputError(f"unknown config fields: {sorted(extra)}")
        return cls(**rec)

    @classmethod
    def from_json(cls, text):
        return cls.from_dict(json.loads(text))

    def hash(self):
        canonical = json.dumps(self.to_dict(), sort_keys=True,
                               separators=(",", ":"))
        return hashlib.sha256(canonical.encode()).hexdigest()

    def validate(self):
        """Fail fast on any violated standing hypothesis.

        Checks the confinement rate, the interaction's boundedness and
        derivative-decay bounds, and the weight summability conditions; the
        raised error names the violated hypothesis.
        """
        if self.model not in MODEL_NAMES:
            raise InvalidInputError(f"unknown model {self.model!r}")
        if not self.lam > 0:
            raise HypothesisViolation(
                "H3", f"confinement rate must be positive, got {self.lam}"
            )
        fam = self.interaction.get("family", "tanh")
        if fam not in FAMILY_NAMES:
            raise InvalidInputError(f"unknown interaction family {fam!r}")
        spec = self.interaction_spec()
        validate_hypotheses(spec, strict=True)
        validate_weights(self.weight_scheme(), strict=True)
        unknown = set(self.suites) - set(SUITE_NAMES)
        if unknown:
            raise InvalidInputError(f"unknown suites: {sorted(unknown)}")
        if not self.integrator.get("h", 0) > 0:
            raise InvalidInputError("integrator step h must be positive")
        return True


SHIPPED_CONFIGS = {
    "heisenberg_smoke": {
        "model": "heisenberg",
        "lam": 1.0,
        "interaction": {"family": "tanh", "C": 1.0, "r": 1,
                        "boundary_mode": "zero-pad"},
        "weights": {"delta": 0.5, "K": 1.0, "horizon": 50},
        "lattice": {"d": 1, "boxes": [1, 2, 3]},
        "integrator": {"h": 1e-3, "T": 1.0, "record_stride": 1},
        "seed": 20240817,
        "suites": list(SUITE_NAMES),
        "suite_params": {
            "control": {"n_problems": 100},
            "kolmogorov": {"replicas": 2000},
            "tail_mass": {"replicas": 1000},
            "box_consistency": {"replicas": 300, "ms": [2, 3, 4]},
            "continuity": {"replicas": 300, "ms": [2, 4]},
            "ergodic": {"replicas": 3000},
            "martingale": {"replicas": 3000,
                           "calibration_replicas": 5000},
            "tightness": {"horizon": 200.0, "burn_in": 25.0},
            "product_tv": {"replicas": 10000},
        },
    },
}


def load_config(name_or_path):
    """Load a config from a shipped name or a JSON file path."""
    if name_or_path in SHIPPED_CONFIGS:
        return ExperimentConfig.from_dict(SHIPPED_CONFIGS[name_or_path])
    with open(name_or_path) as fh:
        return ExperimentConfig.from_json(fh.read())
