"""CLI package for the PIN landmark pipeline."""

from .commands import (
    handle_eval_ablation,
    handle_eval_multi,
    handle_fit_pca,
    handle_gen_data,
    handle_infer,
    handle_train,
)

__all__ = [
    "handle_gen_data",
    "handle_fit_pca",
    "handle_train",
    "handle_infer",
    "handle_eval_ablation",
    "handle_eval_multi",
]
