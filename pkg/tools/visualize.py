import matplotlib
matplotlib.use('Agg')
import matplotlib.pyplot as plt
import numpy as np


def plot_toy_samples(samples, centers=None, real=None):
    """
    toy ring 샘플을 시각화하는 함수

    Args:
        samples: 생성 샘플 (N, 2)
        centers: mode 중심 (K, 2), 옵션
        real: 실제 데이터 (M, 2), 옵션
    """
    fig, ax = plt.subplots(figsize=(6, 6))
    if real is not None:
        real = np.asarray(real).reshape(len(real), -1)
        ax.scatter(real[:, 0], real[:, 1], s=4, c='lightgray', label='Real')
    samples = np.asarray(samples).reshape(len(samples), -1)
    ax.scatter(samples[:, 0], samples[:, 1], s=4, c='tab:blue', label='Generated')
    if centers is not None:
        centers = np.asarray(centers)
        ax.scatter(centers[:, 0], centers[:, 1], marker='x', s=60, c='tab:red', label='Mode centers')
    ax.set_aspect('equal')
    ax.legend(loc='upper right')
    ax.set_title('Generated Samples')

    plt.tight_layout()
    return fig


def plot_accuracy_curve(curve, baseline=None):
    """
    label budget 별 student 정확도 곡선

    Args:
        curve: budget, mean_accuracy 컬럼을 가진 DataFrame
        baseline: 실제 데이터로 학습한 classifier 정확도, 옵션
    """
    fig, ax = plt.subplots(figsize=(8, 5))
    ax.plot(curve['budget'], curve['mean_accuracy'], marker='o', label='Student (synthetic labels)')
    if baseline is not None:
        ax.axhline(baseline, color='tab:gray', linestyle='--', label='Annotator (real data)')
    ax.set_xscale('log')
    ax.set_xlabel('Labelled samples')
    ax.set_ylabel('Test accuracy')
    ax.set_ylim(0, 1)
    ax.legend()

    plt.tight_layout()
    return fig
