from .ablation import (
    AblationCell,
    AblationRow,
    AblationTable,
    expand_grid,
    parse_grid,
    render_report,
    render_tables,
    run_ablation,
)
from .config import RunConfig
from .metrics import (
    EPS,
    MetricsReport,
    SeedResult,
    accuracy,
    aggregate_runs,
    auc_roc,
    bce_loss,
    bce_loss_torch,
    binary_cross_entropy,
    binary_cross_entropy_torch,
    one_hot,
)
from .training import TrainedModel, choose_demos, evaluate, prepare_inputs, run_seeds, train
