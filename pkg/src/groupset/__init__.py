"""SET-style card games over arbitrary finite groups.

Build groups from a small expression language, play the product-to-identity
and arithmetic-progression rules on them, analyze set probabilities and
guarantee thresholds, and serve live sessions over HTTP.
"""

from .groups import (
    Alternating,
    Cyclic,
    DirectProduct,
    Element,
    GroupSpec,
    Power,
    Symmetric,
    Wreath,
    compose,
    element_at,
    element_of,
    element_order,
    elements,
    identity,
    inverse,
    is_abelian,
    order,
    order_histogram,
)
from .dsl import GroupExprError, parse_group_expr, print_group_expr
from .rules import (
    ArithmeticProgression,
    ProductIdentity,
    complete_ap,
    complete_product,
    completion_failure_rate,
    feature_predicate_set,
    is_set,
    pentagon_symmetry,
    rule_is_torsor_invariant,
    sum_zero,
)
from .variants import Card, Deck, FeatureVector, VariantSpec, build_deck, card_descriptor, catalog, variant_by_id
from .analysis import cap_search, find_sets, guarantee_threshold, set_probability, verify_paper_facts
from .session import GameSession, new_session, replay

__version__ = "0.1.0"
