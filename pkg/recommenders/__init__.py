# recommenders/__init__.py
from recommenders.base import BaseRecommender, Recommendation, rank_items
from recommenders.ecf_omd import ECFOMDRecommender, NegativeCentroidCache
from recommenders.cf_komd import CFKOMDRecommender
from recommenders.msdw import MSDWRecommender
from recommenders.cfomd_reference import CFOMDReference

__all__ = [
    'BaseRecommender', 'Recommendation', 'rank_items', 'ECFOMDRecommender',
    'NegativeCentroidCache', 'CFKOMDRecommender', 'MSDWRecommender', 'CFOMDReference',
]
