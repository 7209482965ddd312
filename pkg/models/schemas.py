from pydantic import BaseModel, ConfigDict, Field, field_validator, model_validator
from typing import Optional, Dict, Any, List, Union
from enum import Enum
import hashlib
import json

from core.exceptions import ConfigurationError

ALWAYS_TRAIN = -1
FOLD_PLAN_VERSION = 1


class KernelFamily(str, Enum):
    LINEAR = "linear"
    POLYNOMIAL = "polynomial"
    RBF = "rbf"
    TANIMOTO = "tanimoto"


class Method(str, Enum):
    ECF_OMD = "ecf-omd"
    CF_KOMD = "cf-komd"
    MSDW = "msdw"
    CFOMD_REF = "cfomd-ref"


class QSource(str, Enum):
    TILDE = "tilde"
    EXACT = "exact"


class TailAxis(str, Enum):
    ITEM_POPULARITY = "item_popularity"
    USER_ACTIVITY = "user_activity"


class KernelSpec(BaseModel):
    """Dot-product kernel definition"""
    model_config = ConfigDict(frozen=True)

    family: KernelFamily = KernelFamily.LINEAR
    c: float = 1.0
    degree: int = 2
    gamma: float = 1.0
    reduced: bool = False
    k0: Optional[float] = Field(None, description="Zero-degree term removed when reduced")

    @model_validator(mode="after")
    def _check_admissible(self):
        # ConfigurationError is not a ValueError, so pydantic lets it propagate
        if self.family == KernelFamily.POLYNOMIAL:
            if self.c < 0:
                raise ConfigurationError(f"polynomial offset c must be >= 0, got {self.c}")
            if self.degree < 1:
                raise ConfigurationError(f"polynomial degree must be >= 1, got {self.degree}")
        if self.family == KernelFamily.RBF and self.gamma <= 0:
            raise ConfigurationError(f"rbf gamma must be > 0, got {self.gamma}")
        return self

    def label(self) -> str:
        """Short human readable description"""
        if self.family == KernelFamily.POLYNOMIAL:
            body = f"polynomial(c={self.c:g},d={self.degree})"
        elif self.family == KernelFamily.RBF:
            body = f"rbf(gamma={self.gamma:g})"
        else:
            body = self.family.value
        return f"rdp-{body}" if self.reduced else body

    def cache_key(self) -> str:
        return json.dumps(self.model_dump(mode="json", exclude={"k0"}), sort_keys=True)


class FoldPlan(BaseModel):
    """User-split / half-rating evaluation protocol, replayable from JSON"""
    version: int = FOLD_PLAN_VERSION
    k: int
    seed: int
    n_users: int
    n_items: int
    min_ratings: int = 5
    dataset_hash: str
    user_fold: List[int] = Field(..., description="Fold id per dense user id, -1 for ALWAYS_TRAIN")
    heldout: List[List[int]] = Field(..., description="Held-out item ids per dense user id")
    config: Dict[str, Any] = Field(default_factory=dict)

    @model_validator(mode="after")
    def _check_shape(self):
        if self.version != FOLD_PLAN_VERSION:
            raise ConfigurationError(f"unsupported fold plan version {self.version}")
        if len(self.user_fold) != self.n_users or len(self.heldout) != self.n_users:
            raise ConfigurationError("fold plan user arrays do not match n_users")
        return self

    def fold_users(self, fold: int) -> List[int]:
        return [u for u, f in enumerate(self.user_fold) if f == fold]

    def fold_sizes(self) -> List[int]:
        sizes = [0] * self.k
        for f in self.user_fold:
            if f != ALWAYS_TRAIN:
                sizes[f] += 1
        return sizes

    def to_json(self) -> str:
        return json.dumps(self.model_dump(mode="json"), sort_keys=True, separators=(",", ":"))

    def plan_hash(self) -> str:
        return hashlib.sha256(self.to_json().encode("utf-8")).hexdigest()


class DatasetStats(BaseModel):
    n_users: int
    n_items: int
    n_ratings: int
    density: float


class UserMetricsRow(BaseModel):
    user: int
    n_pos: int
    n_neg: int
    auc: Optional[float] = None
    ap_at_n: Optional[float] = None
    precision_at_n: Optional[float] = None
    skipped: bool = False
    reason: Optional[str] = None


class MetricsReport(BaseModel):
    """Aggregated ranking quality for one run (one fold)"""
    auc: float = 0.0
    auc_user_std: float = 0.0
    map_at_n: float = 0.0
    precision_at_n: float = 0.0
    top_n: int = 500
    n_users: int = 0
    n_skipped: int = 0
    n_failed: int = 0
    zero_users: bool = True
    std_undefined: bool = True
    fold: Optional[int] = None
    seed: Optional[int] = None
    config: Dict[str, Any] = Field(default_factory=dict)
    per_user: Optional[List[UserMetricsRow]] = None

    @model_validator(mode="after")
    def _check_ranges(self):
        if not (0.0 <= self.auc <= 1.0) or not (0.0 <= self.map_at_n <= 1.0):
            raise ValueError("auc and map_at_n must lie in [0, 1]")
        if self.n_users < 0:
            raise ValueError("n_users must be >= 0")
        return self


class ExperimentReport(BaseModel):
    """Mean and fold standard deviation over the folds of a protocol"""
    auc_mean: float
    auc_fold_std: float
    map_mean: float
    map_fold_std: float
    auc_user_std_mean: float
    n_folds: int
    folds: List[MetricsReport]
    config: Dict[str, Any] = Field(default_factory=dict)


class DensityReport(BaseModel):
    p: float
    n: int
    m: int
    p_offdiag: float
    d_k: float
    empirical: Optional[float] = None


class TailFit(BaseModel):
    axis: Optional[TailAxis] = None
    exponent: float
    intercept: float
    r2: float
    n_points: int


class AnalysisReport(BaseModel):
    stats: DatasetStats
    density: DensityReport
    item_fit: Optional[TailFit] = None
    user_fit: Optional[TailFit] = None
    errors: Dict[str, str] = Field(default_factory=dict)
    config: Dict[str, Any] = Field(default_factory=dict)


class RecommendationMeta(BaseModel):
    """Sidecar describing a recommendations TSV"""
    method: Method
    fold: int
    n_users: int
    dataset_hash: str
    plan_hash: str
    config: Dict[str, Any] = Field(default_factory=dict)


class RunConfig(BaseModel):
    """Validated configuration of one recommend/eval/experiment run"""
    data: str
    delimiter: str = "auto"
    threshold: Optional[float] = None
    method: Method = Method.ECF_OMD
    kernel: Optional[KernelSpec] = None
    lambda_p: float = Field(0.01, ge=0.0)
    q_source: Optional[QSource] = None
    alpha: Optional[float] = None
    locality_q: Optional[float] = None
    folds: int = Field(5, ge=2)
    fold: Union[int, str] = 0
    seed: int = 42
    top_n: int = Field(500, ge=1)
    threads: int = Field(1, ge=1)
    tol: float = Field(1e-6, gt=0.0)
    max_iter: int = Field(1000, ge=1)
    out: str = "out"

    @field_validator("fold", mode="before")
    @classmethod
    def _parse_fold(cls, value):
        if isinstance(value, str) and value != "all":
            try:
                return int(value)
            except ValueError:
                raise ConfigurationError(f"fold must be an integer or 'all', got {value!r}")
        return value

    @model_validator(mode="after")
    def _check_compatibility(self):
        if self.method == Method.CF_KOMD:
            if self.kernel is None:
                raise ConfigurationError("cf-komd needs a kernel specification")
        elif self.kernel is not None:
            raise ConfigurationError(f"kernel options are not accepted by {self.method.value}")

        if self.method != Method.CF_KOMD and self.q_source is not None:
            raise ConfigurationError(f"--q-source only applies to cf-komd, not {self.method.value}")

        if self.method == Method.MSDW:
            alpha = 0.5 if self.alpha is None else self.alpha
            locality = 1.0 if self.locality_q is None else self.locality_q
            if not 0.0 <= alpha <= 1.0:
                raise ConfigurationError(f"msdw alpha must lie in [0, 1], got {alpha}")
            if locality < 1.0:
                raise ConfigurationError(f"msdw locality q must be >= 1, got {locality}")
        elif self.alpha is not None or self.locality_q is not None:
            raise ConfigurationError(f"--alpha/--locality-q only apply to msdw, not {self.method.value}")

        if isinstance(self.fold, int) and not 0 <= self.fold < self.folds:
            raise ConfigurationError(f"fold {self.fold} outside [0, {self.folds})")
        return self

    @property
    def effective_q_source(self) -> QSource:
        return self.q_source or QSource.TILDE

    @property
    def effective_alpha(self) -> float:
        return 0.5 if self.alpha is None else self.alpha

    @property
    def effective_locality_q(self) -> float:
        return 1.0 if self.locality_q is None else self.locality_q

    def fold_ids(self) -> List[int]:
        return list(range(self.folds)) if self.fold == "all" else [int(self.fold)]

    def echo(self) -> Dict[str, Any]:
        """Config echo embedded in output artifacts"""
        return self.model_dump(mode="json", exclude_none=True)
