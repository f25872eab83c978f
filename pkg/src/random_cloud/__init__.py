"""Random Cloud: training-free topology search for sigmoid MLPs, with pruning baselines."""

from .baselines import PruneSpec, magnitude_prune, prune_pipeline, random_prune
from .cloud import CloudConfig, CloudResult, ExplorationRecord, explore_cloud, explore_one, run_cloud, selection_rule
from .data import Dataset, load_dataset, make_split, stratified_split
from .metrics import MetricSet, PairedTestResult, auc_roc, evaluate, macro_f1, wilcoxon_signed_rank
from .nn import Network, Topology, TrainConfig, forward, gradients, random_network, train
from .runner import ExperimentConfig, ExperimentReport, run_experiment, sweep_hyperparams, time_methods
from .topology import ReductionStep, effective_topology, parameter_count, reconstruct, reduce_topology

__version__ = "0.1.0"
