"""Community detection by sparse recovery against the random-walk Laplacian."""

from .baselines import KMeansConfig, kmeans, spectral_clustering
from .bench import (ExperimentRecord, ExperimentSpec, fit_loglog_slope,
                    load_spec, run_cocluster, run_experiment, run_noise_sweep,
                    run_recovery, run_scaling)
from .diagnostics import (IntraProductStats, RicReport, chi_statistic,
                          coherence, default_alpha, erc_check,
                          intra_inner_product_floor, laplacian_eigenvalues,
                          perturbation_split, recovery_regime, ric_bruteforce,
                          ric_sampled, ric_spectral_bound)
from .estimators import (CoClusterPursuit, IteratedClusterPursuit,
                         SingleClusterPursuit, SpectralClusteringBaseline,
                         validate_adjacency)
from .generators import (DegreeSplit, Partition, SbmParams, SbmSample,
                         degree_split, gen_er, gen_sbm, stream_seed,
                         substream)
from .graph import (GraphError, InducedSubgraph, LaplacianView, SparseGraph,
                    as_index_set, bfs_component, build_graph,
                    connected_components, drop_isolated, graph_from_adjacency,
                    graph_from_arrays, induced_subgraph)
from .io import (read_cluster_csv, read_edge_list, read_labels_csv,
                 read_matrix_csv, read_points_csv, write_cluster_csv,
                 write_edge_list, write_labels_csv, write_matrix_csv)
from .pipeline import (ThresholdResult, degree_threshold,
                       degree_threshold_iterated, gaussian_affinity,
                       knn_sparsify, misclassification, partition_accuracy)
from .pursuit import (BipartiteLaplacianOperator, ClusterResult,
                      CoclusterResult, IscpResult, OMEGA_FACTOR_DEFAULT,
                      PursuitError, ScpConfig, cocluster,
                      connected_component_omp, iscp, laplacian_operator, scp,
                      threshold_stage)
from .solvers import (ColumnOperator, MatrixOperator, RecoveryProblem,
                      RecoveryResult, RestrictedOperator, SolverError,
                      hard_threshold, lsqr_solve, omp, select_largest,
                      subspace_pursuit)

__version__ = "0.1.0"
