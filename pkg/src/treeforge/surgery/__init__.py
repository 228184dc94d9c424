from .certificates import IncompatibilityCertificate, intersection_tree, omega_incompatibility, sacks_incompatibility
from .coloring import (
    Coloring,
    ColoringError,
    ThinPlan,
    coloring_from_json,
    divergence_index,
    divergence_level,
    ev_diff_family,
    explicit_coloring,
    locate,
    modular,
    split_permitted,
)
from .omega import (
    OmegaThinningError,
    audit_omega_thin,
    laver_extract_X0,
    laver_incompatibility,
    laver_thin,
    laver_tree,
    laver_weakly_obeys_at,
    miller_incompatibility,
    miller_thin,
    miller_tree,
    omega_antichain,
)
from .sacks import (
    AntichainResult,
    NoGoodBlocksError,
    NotGoodError,
    ObeysReport,
    ThinningError,
    ThinAudit,
    antichain_build,
    audit_thin,
    certify_pairs,
    good_blocks,
    ramifying_extension,
    sacks_thin,
    sacks_weakly_obeys_at,
)
from .silver import (
    SilverAudit,
    SilverCondition,
    audit_silver_thin,
    SilverError,
    agree_upto,
    common_free,
    silver,
    silver_antichain,
    silver_from_json,
    silver_incompatibility,
    silver_lazy,
    silver_thin,
    silver_to_tree,
)
