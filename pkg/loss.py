import torch
import torch.nn.functional as F

# 모든 loss 는 (n × k) 출력에 대한 행 평균 스칼라; n = 1 이면 예제별 loss


def softmax_cross_entropy(pred: torch.Tensor, target: torch.Tensor) -> torch.Tensor:
    # target 은 one-hot
    return -(target * F.log_softmax(pred, dim=-1)).sum(dim=-1).mean()


def wasserstein_critic_real(pred: torch.Tensor, target: torch.Tensor = None) -> torch.Tensor:
    # critic 은 real 점수를 최대화
    return -pred.mean()


def wasserstein_critic_fake(pred: torch.Tensor, target: torch.Tensor = None) -> torch.Tensor:
    return pred.mean()


def wasserstein_generator(pred: torch.Tensor, target: torch.Tensor = None) -> torch.Tensor:
    # critic(G(z)) 를 통해 generator 로 역전파
    return -pred.mean()


def mse_loss(pred: torch.Tensor, target: torch.Tensor) -> torch.Tensor:
    return ((pred - target) ** 2).sum(dim=-1).mean()


LOSS_REGISTRY = {
    'softmax_cross_entropy': softmax_cross_entropy,
    'wasserstein_critic_real': wasserstein_critic_real,
    'wasserstein_critic_fake': wasserstein_critic_fake,
    'wasserstein_generator': wasserstein_generator,
    'mse': mse_loss,
}

LABELLED_LOSSES = ('softmax_cross_entropy', 'mse')


def get_loss(loss_name: str):
    if loss_name not in LOSS_REGISTRY:
        raise ValueError(f"unsupported loss: {loss_name}")
    return LOSS_REGISTRY[loss_name]


def prepare_targets(loss_name: str, labels, n: int, output_dim: int) -> torch.Tensor:
    """Turn caller labels into the per-row target tensor the loss expects.

    Class ids become one-hot rows for cross entropy; wasserstein losses take no
    labels and get a zero placeholder so every loss vmaps the same way.
    """
    if loss_name == 'softmax_cross_entropy':
        if labels is None:
            raise ValueError("softmax_cross_entropy needs class labels")
        ids = torch.as_tensor(labels, dtype=torch.int64)
        if ids.shape != (n,):
            raise ValueError(f"expected {n} class ids, got shape {tuple(ids.shape)}")
        if ids.numel() and (ids.min() < 0 or ids.max() >= output_dim):
            raise ValueError(f"class ids must lie in [0, {output_dim})")
        return F.one_hot(ids, output_dim).to(torch.float64)
    if loss_name == 'mse':
        if labels is None:
            raise ValueError("mse needs regression targets")
        target = torch.as_tensor(labels, dtype=torch.float64).reshape(n, -1)
        if target.shape[1] != output_dim:
            raise ValueError(f"mse targets must have width {output_dim}")
        return target
    get_loss(loss_name)
    return torch.zeros(n, 1, dtype=torch.float64)
