"""Approximate spectral clustering on CONN graphs with DCONN-based edge filtering."""

from .dataset import Dataset, NoiseSpec, add_noise, generate_synthetic, load_csv, save_csv
from .graph import (
    ConnGraph,
    DconnMatrix,
    Thresholds,
    build_conn,
    build_dconn,
    dconn_balance,
    filter_all,
    global_filter,
    local_filter,
)
from .metrics import clustering_accuracy, edge_count, rand_index
from .spectral import (
    ClusterResult,
    Laplacian,
    SpectralEmbedding,
    build_laplacian,
    cluster_embedding,
    embed,
    generalize_labels,
    select_k_auto,
    spectral_cluster,
)
from .vq import BmuAssignment, Codebook, assign_bmus, train

__version__ = "0.1.0"
