import torch
import torch.nn.init as init


def weights_init_lecun(weight, generator=None):
    # SELU 네트워크용 LeCun normal (fan_in, gain 1)
    init.kaiming_normal_(weight, a=0, mode='fan_in', nonlinearity='linear', generator=generator)


def weights_init_kaiming(weight, generator=None):
    init.kaiming_normal_(weight, a=0, mode='fan_in', nonlinearity='relu', generator=generator)


def weights_init_xavier(weight, generator=None):
    init.xavier_normal_(weight, gain=init.calculate_gain('tanh'), generator=generator)


def weight_init(weight, activation, generator=None):
    """Initialise a (rows = fan_in, cols = fan_out) weight in place for the given activation.

    torch's fan computation assumes (out, in), so the transposed view is initialised.
    """
    view = weight.t()
    if activation == 'relu':
        weights_init_kaiming(view, generator)
    elif activation == 'tanh':
        weights_init_xavier(view, generator)
    else:
        weights_init_lecun(view, generator)
    return weight


def zeros_init(size):
    return torch.zeros(size, dtype=torch.float64)
