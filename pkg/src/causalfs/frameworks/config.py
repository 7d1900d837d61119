"""Selector configuration and named model variants."""

from dataclasses import asdict, dataclass, field, fields, replace

from ..numkit.cv import DEFAULT_LAMBDA2_GRID
from ..smoothing import SmoothingSpec

FRAMEWORKS = ("threeStage", "twoStagePrelim", "oal", "oaenet")
EXPOSURES = ("svm", "logistic")

#: Named variants: (framework, exposure estimator, smoothing kind)
MODEL_NAMES = {
    "Enh-ELRT": ("threeStage", "logistic", "tanh"),
    "Enh-ELRS": ("threeStage", "logistic", "sigmoid"),
    "Enh-ESVMT": ("threeStage", "svm", "tanh"),
    "Enh-ESVMS": ("threeStage", "svm", "sigmoid"),
    "ELRS": ("twoStagePrelim", "logistic", "sigmoid"),
    "ESVMS": ("twoStagePrelim", "svm", "sigmoid"),
    "OAL": ("oal", "logistic", "oalInverse"),
    "OAENet": ("oaenet", "logistic", "oalInverse"),
}
THREE_STAGE_MODELS = ("Enh-ELRT", "Enh-ELRS", "Enh-ESVMT", "Enh-ESVMS")


def _floats(values):
    return tuple(float(v) for v in values)


@dataclass(frozen=True)
class SelectorConfig:
    """Everything that determines a selector variant.

    ``lambda2_grid``/``n_lambda1``/``lambda1_min_ratio`` drive the outcome
    stages; ``oal_*`` fields drive the wAMD search of the outcome-adaptive
    baselines (``oal_convergence_grid`` holds the Gamma values, mapped to
    gamma = 2*Gamma + 1 + ``oal_gamma_margin``).
    """

    framework: str = "threeStage"
    exposure: str = "svm"
    smoothing: SmoothingSpec = field(default_factory=SmoothingSpec)
    gamma2: float = 1.0
    lambda2_grid: tuple = DEFAULT_LAMBDA2_GRID
    n_lambda1: int = 50
    lambda1_min_ratio: float = 1e-3
    cv_folds: int = 10
    cv_seed: int = 0
    svm_C: float = 1.0
    logistic_ridge: float = 1e-8
    oal_convergence_grid: tuple = (0.0, 0.25, 0.5)
    oal_gamma_margin: float = 0.05
    oal_n_lambda: int = 25
    oal_lambda_min_ratio: float = 1e-4
    oal_lambda_grid: tuple = None
    oaenet_lambda2_grid: tuple = DEFAULT_LAMBDA2_GRID
    name: str = None

    def __post_init__(self):
        if self.framework not in FRAMEWORKS:
            raise ValueError(f"unknown framework {self.framework!r}")
        if self.exposure not in EXPOSURES:
            raise ValueError(f"unknown exposure estimator {self.exposure!r}")
        if isinstance(self.smoothing, str):
            object.__setattr__(self, "smoothing", SmoothingSpec(self.smoothing))
        if self.framework in ("threeStage", "twoStagePrelim"):
            if self.smoothing.kind not in ("sigmoid", "tanh"):
                raise ValueError(f"{self.framework} needs sigmoid or tanh smoothing")
        else:
            # outcome-adaptive baselines always use a logistic exposure model
            object.__setattr__(self, "exposure", "logistic")
        if not self.gamma2 > 0:
            raise ValueError("gamma2 must be > 0")
        if not self.svm_C > 0:
            raise ValueError("svm_C must be > 0")
        if any(g < 0 for g in self.oal_convergence_grid):
            raise ValueError("Gamma values must be >= 0")
        for name in ("lambda2_grid", "oal_convergence_grid", "oaenet_lambda2_grid"):
            object.__setattr__(self, name, _floats(getattr(self, name)))
        if self.oal_lambda_grid is not None:
            object.__setattr__(self, "oal_lambda_grid", _floats(self.oal_lambda_grid))

    @classmethod
    def from_name(cls, name, **overrides):
        try:
            framework, exposure, kind = MODEL_NAMES[name]
        except KeyError:
            raise ValueError(f"unknown model {name!r}; known: {sorted(MODEL_NAMES)}") from None
        return cls(framework=framework, exposure=exposure, smoothing=SmoothingSpec(kind),
                   name=name, **overrides)

    @property
    def label(self):
        return self.name or f"{self.framework}-{self.exposure}-{self.smoothing.kind}"

    @property
    def oal_gammas(self):
        return tuple(2.0 * g + 1.0 + self.oal_gamma_margin for g in self.oal_convergence_grid)

    def with_overrides(self, **kw):
        return replace(self, **kw)

    def to_kv(self):
        """Render as flat ``key = value`` lines (tuples comma-separated)."""
        lines = []
        for f in fields(self):
            v = getattr(self, f.name)
            if f.name == "smoothing":
                lines.append(f"smoothing = {v.kind}")
                lines.append(f"gamma1 = {v.gamma!r}")
                continue
            if v is None:
                continue
            if isinstance(v, tuple):
                v = ", ".join(repr(x) for x in v)
            lines.append(f"{f.name} = {v}")
        return "\n".join(lines) + "\n"

    @classmethod
    def from_kv(cls, text):
        """Parse the format written by :meth:`to_kv` (``#`` comments allowed)."""
        raw = {}
        for line in text.splitlines():
            line = line.split("#", 1)[0].strip()
            if not line:
                continue
            key, sep, value = line.partition("=")
            if not sep:
                raise ValueError(f"malformed config line: {line!r}")
            raw[key.strip()] = value.strip()
        return cls.from_mapping(raw)

    @classmethod
    def from_mapping(cls, raw):
        raw = dict(raw)
        kind = raw.pop("smoothing", "sigmoid")
        gamma1 = raw.pop("gamma1", None)
        kw = {}
        types = {f.name: f for f in fields(cls)}
        defaults = asdict(cls())
        for key, value in raw.items():
            if key not in types:
                raise ValueError(f"unknown config key {key!r}")
            default = defaults[key]
            if key in ("framework", "exposure", "name"):
                kw[key] = str(value)
            elif key.endswith("_grid"):
                kw[key] = tuple(float(x) for x in str(value).split(",") if x.strip())
            elif isinstance(default, int) and not isinstance(default, bool):
                kw[key] = int(value)
            else:
                kw[key] = float(value)
        smoothing = SmoothingSpec(kind, None if gamma1 is None else float(gamma1))
        return cls(smoothing=smoothing, **kw)
