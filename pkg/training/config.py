import json
from dataclasses import asdict, dataclass, fields

from errors import ConfigError

DISCRIMINATIVE = "discriminative"
GENERATIVE = "generative"
MODEL_KINDS = (DISCRIMINATIVE, GENERATIVE)


@dataclass(frozen=True)
class RunConfig:
    # model dims
    hidden: int = 32            # d
    emb_dim: int = 16
    factors: int = 2            # k
    mfb_hidden: int = 64        # l
    model_kind: str = DISCRIMINATIVE

    # ranking
    tau: float = 0.25
    select_n: int = 10          # N
    select_m: int = 30          # M
    beam_width: int = 15        # B
    beam_max_len: int = 20

    # dataset shape
    num_dialogs: int = 32
    num_turns: int = 3
    num_candidates: int = 30    # C
    num_objects: int = 4        # n
    pronoun_fraction: float = 0.3
    synonym_relevance: bool = True
    feature_noise: float = 0.05
    min_count: int = 0

    # optimizer
    lr: float = 1e-3
    beta1: float = 0.9
    beta2: float = 0.99
    eps: float = 1e-8
    decay_rate: float = 0.25
    decay_every: int = 7
    primary_epochs: int = 7
    joint_epochs: int = 15
    grad_accumulation: int = 1
    seed: int = 0

    @classmethod
    def from_dict(cls, data):
        known = {f.name for f in fields(cls)}
        unknown = sorted(set(data) - known)
        if unknown:
            raise ConfigError(f"unknown config fields: {unknown}")
        try:
            return cls(**data).validate()
        except TypeError as e:
            raise ConfigError(f"config field has the wrong type ({e})")

    @classmethod
    def from_json(cls, path):
        try:
            with open(path, "r") as f:
                data = json.load(f)
        except FileNotFoundError:
            raise ConfigError(f"config file not found: {path}")
        except json.JSONDecodeError as e:
            raise ConfigError(f"{path}: invalid JSON ({e})")
        if not isinstance(data, dict):
            raise ConfigError(f"{path}: config must be a JSON object")
        return cls.from_dict(data)

    def to_dict(self):
        return asdict(self)

    # CLI flags left unset arrive as None and keep the file value
    def with_overrides(self, **overrides):
        changes = {k: v for k, v in overrides.items() if v is not None}
        return self.from_dict({**self.to_dict(), **changes})

    @property
    def total_epochs(self):
        return self.primary_epochs + self.joint_epochs

    def validate(self):
        if self.model_kind not in MODEL_KINDS:
            raise ConfigError(f"model_kind must be one of {MODEL_KINDS}, got {self.model_kind!r}")
        if not 0 < self.tau <= 1:
            raise ConfigError(f"tau must be in (0, 1], got {self.tau}")
        if not 1 <= self.select_n <= self.select_m <= self.num_candidates:
            raise ConfigError(
                f"need 1 <= N <= M <= C, got N={self.select_n} M={self.select_m} C={self.num_candidates}"
            )
        for name in ("hidden", "emb_dim", "factors", "mfb_hidden", "beam_width", "beam_max_len",
                     "decay_every", "grad_accumulation"):
            if getattr(self, name) < 1:
                raise ConfigError(f"{name} must be >= 1, got {getattr(self, name)}")
        if self.primary_epochs < 0 or self.joint_epochs < 0:
            raise ConfigError("epoch counts cannot be negative")
        if self.lr <= 0 or self.eps <= 0:
            raise ConfigError("lr and eps must be positive")
        if not (0 <= self.beta1 < 1 and 0 <= self.beta2 < 1):
            raise ConfigError(f"betas must be in [0, 1), got {self.beta1}, {self.beta2}")
        if not 0 < self.decay_rate <= 1:
            raise ConfigError(f"decay_rate must be in (0, 1], got {self.decay_rate}")
        return self
