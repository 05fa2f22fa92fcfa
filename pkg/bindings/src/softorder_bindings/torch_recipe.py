"""Custom-gradient registration example for torch.

torch is deliberately not a dependency of this package; the factories below
import it on first call, so this module is importable everywhere and usable
wherever torch happens to be installed. The pattern is the standard
``torch.autograd.Function`` pairing: run the wrapper on a detached CPU copy
in ``forward``, stash the gradient handle on the context, and pull the
incoming cotangent through the handle's closed-form vjp in ``backward``.

Usage:

    from softorder_bindings.torch_recipe import soft_topk_fn, soft_sort_fn

    TopK = soft_topk_fn()
    probs = TopK.apply(scores, 3.0, -0.5)   # scores: 1-D float64 tensor
    probs.sum().backward()                  # scores.grad is the exact vjp

``k`` and ``alpha`` are plain Python floats here and get no grad; their
sensitivities are available on the handle (``grad_k`` / ``grad_alpha``) for
anyone who wants to learn the budget or the temperature, and wiring them up
is the same stash-and-return pattern with two extra outputs of ``backward``.
"""

__all__ = ["soft_topk_fn", "soft_rank_fn", "soft_sort_fn"]


def soft_topk_fn():
    """Build a ``torch.autograd.Function`` wrapping ``py_soft_topk``."""
    import torch

    from .ops import py_soft_topk

    class SoftTopK(torch.autograd.Function):
        @staticmethod
        def forward(ctx, scores, k, alpha):
            probs, handle = py_soft_topk(
                scores.detach().cpu().numpy(), float(k), float(alpha)
            )
            ctx.handle = handle
            return torch.from_numpy(probs).to(scores.device)

        @staticmethod
        def backward(ctx, grad_out):
            pulled = ctx.handle.vjp(grad_out.detach().cpu().numpy())
            return torch.from_numpy(pulled).to(grad_out.device), None, None

    return SoftTopK


def soft_rank_fn():
    """Build a ``torch.autograd.Function`` wrapping ``py_soft_rank``."""
    import torch

    from .ops import py_soft_rank

    class SoftRank(torch.autograd.Function):
        @staticmethod
        def forward(ctx, scores, alpha):
            ranks, handle = py_soft_rank(scores.detach().cpu().numpy(), float(alpha))
            ctx.handle = handle
            return torch.from_numpy(ranks).to(scores.device)

        @staticmethod
        def backward(ctx, grad_out):
            pulled = ctx.handle.vjp(grad_out.detach().cpu().numpy())
            return torch.from_numpy(pulled).to(grad_out.device), None

    return SoftRank


def soft_sort_fn():
    """Build a ``torch.autograd.Function`` wrapping ``py_soft_sort``."""
    import torch

    from .ops import py_soft_sort

    class SoftSort(torch.autograd.Function):
        @staticmethod
        def forward(ctx, scores, alpha):
            values, handle = py_soft_sort(scores.detach().cpu().numpy(), float(alpha))
            ctx.handle = handle
            return torch.from_numpy(values).to(scores.device)

        @staticmethod
        def backward(ctx, grad_out):
            pulled = ctx.handle.vjp(grad_out.detach().cpu().numpy())
            return torch.from_numpy(pulled).to(grad_out.device), None

    return SoftSort
