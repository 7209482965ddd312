# core/recommender_engine.py
import logging
from typing import Any, Callable, Dict, Optional

from config.settings import Settings
from core.exceptions import ConfigurationError
from core.utils import GramCache
from models.schemas import Method, RunConfig
from recommenders import (
    BaseRecommender, CFKOMDRecommender, CFOMDReference, ECFOMDRecommender, MSDWRecommender,
)

logger = logging.getLogger(__name__)

Factory = Callable[[RunConfig, Settings, Optional[GramCache]], BaseRecommender]


class RecommenderEngine:
    """Builds recommenders from a validated run configuration"""

    def __init__(self, settings: Optional[Settings] = None):
        self.settings = settings or Settings()
        self.factories: Dict[str, Factory] = {}
        self.available_methods: Dict[str, Dict[str, Any]] = {}
        self._initialize_recommenders()

    def _initialize_recommenders(self):
        self.register(Method.ECF_OMD, _make_ecf_omd, ECFOMDRecommender)
        self.register(Method.CF_KOMD, _make_cf_komd, CFKOMDRecommender)
        self.register(Method.MSDW, _make_msdw, MSDWRecommender)
        self.register(Method.CFOMD_REF, _make_cfomd_ref, CFOMDReference)
        logger.debug("recommender engine initialized with %d methods", len(self.factories))

    def register(self, method: Method, factory: Factory, cls: type) -> None:
        self.factories[method.value] = factory
        doc = (cls.__doc__ or cls.__module__).strip().splitlines()[0]
        self.available_methods[method.value] = {'name': method.value, 'class': cls.__name__, 'doc': doc}

    def create(self, config: RunConfig, cache: Optional[GramCache] = None) -> BaseRecommender:
        factory = self.factories.get(config.method.value)
        if factory is None:
            raise ConfigurationError(f"unknown method: {config.method.value}")
        return factory(config, self.settings, cache)

    def get_available_methods(self) -> Dict[str, Dict[str, Any]]:
        return dict(self.available_methods)


def _make_ecf_omd(config: RunConfig, settings: Settings, cache: Optional[GramCache]) -> BaseRecommender:
    return ECFOMDRecommender(
        lambda_p=config.lambda_p,
        tol=config.tol,
        max_iter=config.max_iter,
        step_scale=settings.solver.step_scale,
        check_monotone=settings.solver.check_monotone,
    )


def _make_cf_komd(config: RunConfig, settings: Settings, cache: Optional[GramCache]) -> BaseRecommender:
    return CFKOMDRecommender(
        spec=config.kernel,
        lambda_p=config.lambda_p,
        q_source=config.effective_q_source,
        tol=config.tol,
        max_iter=config.max_iter,
        step_scale=settings.solver.step_scale,
        threads=config.threads,
        dense_cap=settings.kernel.dense_cap,
        cache=cache,
    )


def _make_msdw(config: RunConfig, settings: Settings, cache: Optional[GramCache]) -> BaseRecommender:
    return MSDWRecommender(alpha=config.effective_alpha, locality_q=config.effective_locality_q)


def _make_cfomd_ref(config: RunConfig, settings: Settings, cache: Optional[GramCache]) -> BaseRecommender:
    return CFOMDReference(
        lambda_p=config.lambda_p,
        lambda_n=settings.solver.reference_lambda_n,
        cap=settings.solver.reference_cap,
        outer_iter=settings.solver.reference_outer_iter,
        tol=config.tol,
        max_iter=config.max_iter,
    )


__all__ = ['RecommenderEngine']
