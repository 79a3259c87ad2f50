"""Multiple independent subspace clusterings.

ICA splits the data into statistically independent components, MDL groups
them into subspaces, and a kernel graph-regularised semi-NMF clusters each
subspace.
"""
from .data import (
    DataMatrix,
    GeneratorSpec,
    LabeledDataset,
    compose_multiview,
    gen_atom,
    gen_gaussian_blobs,
    gen_lsun,
    gen_rings,
    generate,
    load_csv,
    standardize,
    two_view_blobs,
)
from .density import DensityModel, entropy_cost, fit_kde, log2_density
from .errors import DegenerateInputError, MiscError, ParseError, StageError
from .factorization import (
    FactorizationState,
    KernelSpec,
    NeighborhoodGraph,
    SolverConfig,
    ablation_solvers,
    gram,
    gsnmf,
    kgsnmf,
    knn_graph,
)
from .ica import SourceDecomposition, amari_error, fast_ica, whiten
from .metrics import ViewReport, evaluate_views, f1_pairs, nmi
from .pipeline import PipelineConfig, RunReport, run_misc, run_pipeline
from .selection import Clustering, kmeans, select_k
from .subspace import (
    MergeTrace,
    SubspacePartition,
    independence_cost,
    merge_subspaces,
    select_partition,
)

__version__ = "0.1.0"
