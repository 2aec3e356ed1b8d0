from .dense import (
    DenseLayer,
    DenseNetwork,
    OptimizerConfig,
    apply_flat,
    batch_gradient,
    build_network,
    clip_weights,
    forward,
    load_network,
    mean_loss,
    optimizer_step,
    per_example_gradients,
    save_network,
)
