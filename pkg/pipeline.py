import argparse
import hashlib
import json
import math
import os
import sys
import time
from dataclasses import replace

import matplotlib.pyplot as plt
import numpy as np
import pandas as pd
import torch
import wandb
from filelock import FileLock, Timeout
from scipy.stats import spearmanr

from accountant import (
    AccountantConfig,
    PrivacyLedger,
    extract_guarantee,
    markov_percentile,
    read_norm_log,
    replay,
    write_norm_log,
)
from dataset import (
    CorruptionSpec,
    ROTATION_DIRECTION,
    ImageDataset,
    at_resolution,
    corrupt,
    load_experiment_data,
    load_idx,
    ring_centers,
    write_idx,
)
from functions import label_histogram, make_grid, save_pgm, write_report
from gan_trainer import GanConfig, generate, mode_coverage, rotation_statistic, train_rotation_detector, train_wgan
from mechanisms import MechanismParams, calibrate_sigma
from model import OptimizerConfig, load_network
from tools.visualize import plot_accuracy_curve, plot_toy_samples
from trainer import (
    TrainConfig,
    convert_seconds_to_hms,
    evaluate,
    predict,
    save_model,
    set_seed,
    train_private_classifier,
    train_student,
)
from utils.config import config_echo, load_config
from utils.errors import BDPError, ConfigError, DimensionError, NumericDivergence
from utils.rng import make_numpy_rng

PLANNED_SOURCES = ('train-gan', 'inspect', 'train-classifier')


def parse_args(argv=None):
    parser = argparse.ArgumentParser(description='Bayesian differentially private GAN toolkit')

    parser.add_argument('--config', type=str, default=None,
                        help='key = value 형식의 실험 설정 파일 경로')
    parser.add_argument('--seed', type=int, default=None,
                        help='설정 파일의 seed 덮어쓰기')
    parser.add_argument('--out-dir', type=str, default='./runs/default',
                        help='결과물(report, checkpoint, 이미지) 저장 경로')
    parser.add_argument('--threads', type=int, default=None,
                        help='torch CPU thread 수')

    subparsers = parser.add_subparsers(dest='command', required=True)
    subparsers.add_parser('train-gan', help='BDP WGAN 학습')
    subparsers.add_parser('inspect', help='clean / bug 데이터로 각각 GAN 을 학습하고 샘플 비교')
    subparsers.add_parser('train-classifier', help='private annotator (및 baseline) 학습')

    annotate = subparsers.add_parser('annotate', help='생성 샘플에 annotator 로 label 부여')
    annotate.add_argument('--generator', type=str, required=True,
                          help='generator checkpoint 경로')
    annotate.add_argument('--annotator', type=str, required=True,
                          help='annotator checkpoint 경로')
    annotate.add_argument('-n', type=int, default=10000,
                          help='생성할 샘플 수')

    student = subparsers.add_parser('eval-student', help='label budget 별 student 정확도 측정')
    student.add_argument('--train-images', type=str, required=True,
                         help='synthetic image IDX 파일 경로')
    student.add_argument('--train-labels', type=str, required=True,
                         help='synthetic label IDX 파일 경로')
    student.add_argument('--budgets', type=int, nargs='+', default=None,
                         help='label budget 목록 (-1 = 전체), 설정 파일보다 우선')

    account = subparsers.add_parser('account', help='norm log 로 ledger 를 다시 계산')
    account.add_argument('--norm-log', type=str, required=True,
                         help='iteration,norm_1..norm_m CSV 경로')
    account.add_argument('--ledger', type=str, default=None,
                         help='accountant 파라미터를 가져올 ledger checkpoint, 옵션')
    account.add_argument('--source', type=str, default='train-gan', choices=PLANNED_SOURCES,
                         help='--ledger 가 없을 때 gamma 를 정한 학습 명령 (planned iteration 수)')

    calibrate = subparsers.add_parser('calibrate', help='(epsilon, delta) 에 맞는 noise multiplier 계산')
    calibrate.add_argument('--epsilon', type=float, required=True)
    calibrate.add_argument('--delta', type=float, required=True)
    calibrate.add_argument('--clip-norm', type=float, default=1.0)

    return parser.parse_args(argv)


def run_id(command, cfg):
    payload = json.dumps({'command': command, 'config': config_echo(cfg)}, sort_keys=True)
    return hashlib.sha256(payload.encode('utf-8')).hexdigest()[:12]


def mechanism_from(cfg):
    sigma = cfg.noise_multiplier
    if cfg.calibrate_epsilon > 0:
        sigma = calibrate_sigma(cfg.calibrate_epsilon, cfg.calibrate_delta, cfg.clip_norm).sigma
    if sigma == 0:
        # non-private: 클리핑도 noise 도 없음
        return MechanismParams(math.inf, 0.0)
    return MechanismParams(cfg.clip_norm, sigma)


def planned_iterations(cfg, source):
    """Accounted iterations a run plans for; gamma defaults to 1e-3 over this count."""
    return cfg.steps * cfg.critic_steps if source in ('train-gan', 'inspect') else cfg.steps


def accountant_from(cfg, mechanism, iterations):
    if not mechanism.private:
        return None
    return AccountantConfig.planned(cfg.q, mechanism.noise_multiplier, cfg.clip_norm, iterations,
                                    m=cfg.accountant_samples, lambda_max=cfg.lambda_max, gamma=cfg.gamma)


def gan_config_from(cfg, squash):
    mechanism = mechanism_from(cfg)
    return GanConfig(
        steps=cfg.steps, q=cfg.q, mechanism=mechanism,
        optimizer=OptimizerConfig(cfg.optimizer, cfg.learning_rate, cfg.decay, cfg.eps),
        accountant=accountant_from(cfg, mechanism, planned_iterations(cfg, 'train-gan')),
        latent_dim=cfg.latent_dim, critic_steps=cfg.critic_steps, weight_clip=cfg.weight_clip,
        generator_hidden=tuple(cfg.generator_hidden), critic_hidden=tuple(cfg.critic_hidden),
        squash=squash, clip_generator=cfg.clip_generator, seed=cfg.seed,
        bdp_delta=cfg.bdp_delta, dp_delta=cfg.dp_delta, epsilon_ceiling=cfg.epsilon_ceiling,
        ceiling_track=cfg.ceiling_track, on_ceiling=cfg.on_ceiling, log_every=cfg.log_every)


def classifier_config_from(cfg):
    mechanism = mechanism_from(cfg)
    return TrainConfig(
        steps=cfg.steps, q=cfg.q, mechanism=mechanism,
        optimizer=OptimizerConfig(cfg.classifier_optimizer, cfg.classifier_learning_rate, cfg.decay, cfg.eps),
        accountant=accountant_from(cfg, mechanism, planned_iterations(cfg, 'train-classifier')),
        seed=cfg.seed, hidden=tuple(cfg.classifier_hidden), bdp_delta=cfg.bdp_delta, dp_delta=cfg.dp_delta,
        percentiles=tuple(cfg.percentiles), epsilon_ceiling=cfg.epsilon_ceiling,
        ceiling_track=cfg.ceiling_track, on_ceiling=cfg.on_ceiling, log_every=cfg.log_every)


def guarantee_section(ledger, cfg):
    """Both tracks together with gamma_spent; never a bdp guarantee on its own."""
    if ledger is None:
        return {'non_private': True, 'note': 'noise_multiplier = 0: no privacy guarantee is claimed'}
    bdp = extract_guarantee(ledger, delta=cfg.bdp_delta, track='bdp', percentiles=cfg.percentiles)
    wc = extract_guarantee(ledger, delta=cfg.dp_delta, track='worst_case')
    section = {
        'non_private': False,
        'bdp': bdp.to_dict(),
        'worst_case': wc.to_dict(),
        'worst_case_at_bdp_delta': extract_guarantee(ledger, delta=cfg.bdp_delta, track='worst_case').to_dict(),
        'gamma_spent': ledger.gamma_spent,
        'iterations': ledger.iterations,
        'sigma': ledger.config.sigma,
    }
    if cfg.dp_delta >= bdp.delta:
        bound = markov_percentile(bdp.epsilon, bdp.delta, cfg.dp_delta)
        section['percentile_statement'] = {'violating_mass': bound.violating_mass, 'statement': bound.statement}
    return section


def save_ledger_artifacts(ledger, norm_log, out_dir, prefix=''):
    artifacts = {}
    if ledger is not None:
        artifacts[f'{prefix}ledger'] = f'{prefix}ledger.txt'
        ledger.save(os.path.join(out_dir, f'{prefix}ledger.txt'))
        artifacts[f'{prefix}norm_log'] = f'{prefix}norm_log.csv'
        write_norm_log(norm_log, os.path.join(out_dir, f'{prefix}norm_log.csv'))
    return artifacts


def _image_shape(dim):
    side = math.isqrt(dim)
    if side * side != dim:
        raise DimensionError(f"generator output width {dim} is not a square image")
    return side, side


def corrupt_test_split(cfg, test):
    """Held-out data carries the bug too only when `corrupt_test` is set."""
    if not cfg.corrupt_test or cfg.corruption_fraction == 0:
        return test
    corrupted, _ = corrupt(test, CorruptionSpec(cfg.corruption_kind, cfg.corruption_fraction, cfg.corruption_seed + 1))
    return corrupted


def cmd_train_gan(cfg, out_dir):
    train, _ = load_experiment_data(cfg, resize=False)
    if cfg.corruption_fraction > 0:
        train, _ = corrupt(train, CorruptionSpec(cfg.corruption_kind, cfg.corruption_fraction, cfg.corruption_seed))
    train = at_resolution(train, cfg.resolution)
    toy = cfg.dataset == 'toy_ring'
    result = train_wgan(train, gan_config_from(cfg, squash=not toy))

    artifacts = {'generator': 'generator.bdpn', 'critic': 'critic.bdpn', 'training_log': 'training_log.csv'}
    save_model(result.generator, os.path.join(out_dir, artifacts['generator']))
    save_model(result.critic, os.path.join(out_dir, artifacts['critic']))
    result.history.to_csv(os.path.join(out_dir, artifacts['training_log']), index=False)
    artifacts.update(save_ledger_artifacts(result.ledger, result.norm_log, out_dir))

    samples = generate(result.generator, cfg.inspect_samples, cfg.seed)
    metrics = {'generator_steps': len(result.history), 'partial': result.partial,
               'generator_fingerprint': samples.checkpoint}
    if toy:
        covered, fractions = mode_coverage(samples, ring_centers(cfg.toy_modes, cfg.toy_radius), cfg.toy_std)
        metrics.update({'modes_covered': covered, 'modes_total': cfg.toy_modes, 'mode_fractions': fractions})
        fig = plot_toy_samples(samples.samples.numpy(), ring_centers(cfg.toy_modes, cfg.toy_radius),
                               train.images.reshape(len(train), -1))
        artifacts['samples'] = 'samples.png'
        fig.savefig(os.path.join(out_dir, artifacts['samples']))
        plt.close(fig)
    else:
        artifacts['samples'] = 'samples.pgm'
        save_pgm(make_grid(samples.as_images(train.shape), cfg.grid_rows, cfg.grid_cols),
                 os.path.join(out_dir, artifacts['samples']))
    return {'guarantees': guarantee_section(result.ledger, cfg), 'metrics': metrics, 'artifacts': artifacts}


def cmd_inspect(cfg, out_dir):
    if cfg.dataset == 'toy_ring':
        raise ConfigError("inspect needs an image dataset (mnist or fashion-mnist)")
    # 회전은 원본 해상도에서 적용하고 그 다음 축소
    train, test = load_experiment_data(cfg, resize=False)
    spec = CorruptionSpec(cfg.corruption_kind, cfg.corruption_fraction, cfg.corruption_seed)
    bug_train, mask = corrupt(train, spec)
    print(f'{int(mask.sum())} of {len(mask)} training images altered ({spec.kind})')
    test = corrupt_test_split(cfg, test)
    train, bug_train = at_resolution(train, cfg.resolution), at_resolution(bug_train, cfg.resolution)

    arms = {'clean': (train, cfg), 'bug': (bug_train, cfg)}
    if cfg.inspect_dp_baseline:
        arms['dp'] = (bug_train, replace(cfg, ceiling_track='worst_case'))
    results, flagged, artifacts = {}, {}, {'real_grid': 'real_samples.pgm'}
    for name, (data, arm_cfg) in arms.items():
        print(f'Training {name} model on {data.name}')
        results[name] = train_wgan(data, gan_config_from(arm_cfg, squash=True))

    # detector 는 public 쪽(test split) 데이터로 학습
    detector = train_rotation_detector(test, hidden=cfg.detector_hidden, steps=cfg.detector_steps,
                                       seed=cfg.seed, kind=cfg.corruption_kind, resolution=cfg.resolution)
    for name, result in results.items():
        samples = generate(result.generator, cfg.inspect_samples, cfg.seed)
        flagged[name] = rotation_statistic(samples, detector)
        artifacts[f'{name}_grid'] = f'{name}_samples.pgm'
        save_pgm(make_grid(samples.as_images(train.shape), cfg.grid_rows, cfg.grid_cols),
                 os.path.join(out_dir, artifacts[f'{name}_grid']))
        artifacts[f'{name}_generator'] = f'{name}_generator.bdpn'
        save_model(result.generator, os.path.join(out_dir, artifacts[f'{name}_generator']))
        artifacts.update(save_ledger_artifacts(result.ledger, result.norm_log, out_dir, f'{name}_'))
    save_pgm(make_grid(bug_train.images, cfg.grid_rows, cfg.grid_cols), os.path.join(out_dir, artifacts['real_grid']))

    difference = flagged['bug'] - flagged['clean']
    metrics = {
        'corruption': {'kind': spec.kind, 'direction': ROTATION_DIRECTION if spec.kind == 'rotate90' else None,
                       'fraction': spec.fraction, 'altered': int(mask.sum())},
        'detector': {'fpr': detector.fpr, 'tpr': detector.tpr},
        'flagged_clean': flagged['clean'],
        'flagged_bug': flagged['bug'],
        'flagged_difference': difference,
        'bug_margin': cfg.bug_margin,
        'bug_signal': difference >= cfg.bug_margin,
    }
    if 'dp' in flagged:
        metrics.update({'flagged_dp': flagged['dp'], 'dp_partial': results['dp'].partial,
                        'dp_generator_steps': len(results['dp'].history)})
    print('Flagged: ' + ', '.join(f'{name} {value:.4f}' for name, value in flagged.items())
          + f" (detector FPR {detector.fpr:.4f}, TPR {detector.tpr:.4f}); bug signal: {metrics['bug_signal']}")
    guarantees = {name: guarantee_section(result.ledger, cfg) for name, result in results.items()}
    return {'guarantees': guarantees, 'metrics': metrics, 'artifacts': artifacts}


def cmd_annotate(cfg, out_dir, generator_path, annotator_path, n):
    if n < 1:
        raise ValueError(f"n must be >= 1, got {n}")
    generator = load_network(generator_path)
    annotator = load_network(annotator_path)
    if annotator.input_dim != generator.output_dim:
        raise DimensionError(f"annotator expects width {annotator.input_dim}, generator emits {generator.output_dim}")
    samples = generate(generator, n, cfg.seed)
    labels = predict(annotator, samples.samples).numpy()
    histogram, warning = label_histogram(labels, annotator.output_dim)

    artifacts = {'images': 'synthetic-images-idx3-ubyte', 'labels': 'synthetic-labels-idx1-ubyte'}
    write_idx(samples.as_images(_image_shape(generator.output_dim)), os.path.join(out_dir, artifacts['images']))
    write_idx(labels, os.path.join(out_dir, artifacts['labels']))
    metrics = {'samples': n, 'label_histogram': histogram, 'warnings': [warning] if warning else [],
               'generator_fingerprint': samples.checkpoint, 'annotator_fingerprint': annotator.fingerprint()}
    return {'metrics': metrics, 'artifacts': artifacts}


def resolve_budgets(budgets, size):
    resolved = [size if b == -1 else b for b in budgets]
    if any(b <= 0 for b in resolved):
        raise ValueError(f"budgets must be positive (or -1 for all), got {budgets}")
    if any(b > size for b in resolved):
        raise ValueError(f"budget {max(resolved)} exceeds the {size} available synthetic examples")
    if resolved != sorted(resolved):
        raise ValueError(f"budgets must be ascending, got {budgets}")
    return resolved


def cmd_eval_student(cfg, out_dir, train_images, train_labels, budgets=None):
    synthetic = ImageDataset(load_idx(train_images), load_idx(train_labels, num_classes=10), 'synthetic')
    _, test = load_experiment_data(cfg)
    if synthetic.dim != test.dim:
        raise DimensionError(f"synthetic images have {synthetic.dim} pixels, test images {test.dim}")
    budgets = resolve_budgets(budgets or cfg.student_budgets, len(synthetic))
    base = TrainConfig(steps=cfg.student_steps, q=1.0, mechanism=MechanismParams(math.inf, 0.0),
                       optimizer=OptimizerConfig(cfg.classifier_optimizer, cfg.classifier_learning_rate,
                                                 cfg.decay, cfg.eps),
                       hidden=tuple(cfg.classifier_hidden))

    rows = []
    for budget in budgets:
        accuracies = []
        for s in range(cfg.student_seeds):
            seed = cfg.seed + s
            order = make_numpy_rng(seed, 'budget').permutation(len(synthetic))
            subset = synthetic.subset(np.sort(order[:budget]), f'synthetic[{budget}]')
            student = train_student(subset, base.non_private(seed=seed), batch_size=cfg.student_batch)
            accuracies.append(evaluate(student, test))
        rows.append([budget, float(np.mean(accuracies)), len(accuracies)])
        print(f'budget {budget:>6d}: accuracy {rows[-1][1]:.4f} over {len(accuracies)} seeds')
    curve = pd.DataFrame(rows, columns=['budget', 'mean_accuracy', 'seed_count'])

    artifacts = {'accuracy_curve': 'accuracy_curve.csv', 'accuracy_plot': 'accuracy_curve.png'}
    curve.to_csv(os.path.join(out_dir, artifacts['accuracy_curve']), index=False)
    fig = plot_accuracy_curve(curve)
    fig.savefig(os.path.join(out_dir, artifacts['accuracy_plot']))
    plt.close(fig)

    rho = float(spearmanr(curve['budget'], curve['mean_accuracy']).statistic) if len(curve) > 1 else float('nan')
    metrics = {'curve': curve.to_dict(orient='records'), 'spearman_rho': rho,
               'random_baseline': 1.0 / synthetic.num_classes}
    return {'metrics': metrics, 'artifacts': artifacts}


def cmd_account(cfg, out_dir, norm_log, ledger_path=None, source='train-gan'):
    samples = read_norm_log(norm_log)
    if ledger_path is not None:
        config = PrivacyLedger.load(ledger_path).config
    else:
        mechanism = mechanism_from(cfg)
        if not mechanism.private:
            raise ConfigError("accounting needs noise_multiplier > 0")
        # 기록된 row 수가 아니라 학습이 계획한 iteration 수로 gamma 를 정함
        config = accountant_from(cfg, mechanism, planned_iterations(cfg, source))
    ledger = replay(samples, config)
    artifacts = {'ledger': 'replayed_ledger.txt'}
    ledger.save(os.path.join(out_dir, artifacts['ledger']))

    section = guarantee_section(ledger, cfg)
    bdp, wc = section['bdp'], section['worst_case']
    print(f"BDP:        ({bdp['epsilon']:.6g}, {bdp['delta']:g}) at lambda={bdp['achieving_lambda']}")
    print(f"Worst case: ({wc['epsilon']:.6g}, {wc['delta']:g}) at lambda={wc['achieving_lambda']}")
    print(f"gamma spent: {ledger.gamma_spent:g} over {ledger.iterations} iterations")
    for pair in bdp['percentile_pairs']:
        print(f"  p={pair['p']:g}: ({pair['epsilon']:.6g}, {pair['delta']:g})")
    if 'percentile_statement' in section:
        print(section['percentile_statement']['statement'])
    return {'guarantees': section, 'metrics': {'rows': len(samples)}, 'artifacts': artifacts}


def cmd_calibrate(cfg, out_dir, epsilon, delta, clip_norm):
    calibration = calibrate_sigma(epsilon, delta, clip_norm)
    print(f'sigma = {calibration.sigma:.6f} (noise stddev {calibration.sigma * clip_norm:.6f})')
    if calibration.warning:
        print(f'warning: {calibration.warning}')
    return {'metrics': {'epsilon': epsilon, 'delta': delta, 'clip_norm': clip_norm, 'sigma': calibration.sigma,
                        'valid': calibration.valid, 'warnings': [calibration.warning] if calibration.warning else []},
            'artifacts': {}}


def cmd_train_classifier(cfg, out_dir):
    if cfg.dataset == 'toy_ring':
        raise ConfigError("train-classifier needs an image dataset")
    train, test = load_experiment_data(cfg, resize=False)
    test = corrupt_test_split(cfg, test)
    train, test = at_resolution(train, cfg.resolution), at_resolution(test, cfg.resolution)
    result = train_private_classifier(train, classifier_config_from(cfg))
    accuracy = evaluate(result.net, test)
    print(f'Test accuracy: {accuracy:.4f}' + (' (stopped at the privacy ceiling)' if result.partial else ''))

    artifacts = {'annotator': 'annotator.bdpn', 'training_log': 'training_log.csv'}
    save_model(result.net, os.path.join(out_dir, artifacts['annotator']))
    result.history.to_csv(os.path.join(out_dir, artifacts['training_log']), index=False)
    artifacts.update(save_ledger_artifacts(result.ledger, result.norm_log, out_dir))
    metrics = {'test_accuracy': accuracy, 'partial': result.partial, 'steps_done': len(result.history)}

    if cfg.train_baseline:
        baseline = train_private_classifier(train, classifier_config_from(cfg).non_private(desc='Baseline'))
        metrics['baseline_test_accuracy'] = evaluate(baseline.net, test)
        artifacts['baseline'] = 'baseline.bdpn'
        save_model(baseline.net, os.path.join(out_dir, artifacts['baseline']))
        print(f"Baseline (non-private) test accuracy: {metrics['baseline_test_accuracy']:.4f}")
    return {'guarantees': guarantee_section(result.ledger, cfg), 'metrics': metrics, 'artifacts': artifacts}


def run_command(args, cfg):
    out_dir = args.out_dir
    if args.command == 'train-gan':
        return cmd_train_gan(cfg, out_dir)
    if args.command == 'inspect':
        return cmd_inspect(cfg, out_dir)
    if args.command == 'annotate':
        return cmd_annotate(cfg, out_dir, args.generator, args.annotator, args.n)
    if args.command == 'eval-student':
        return cmd_eval_student(cfg, out_dir, args.train_images, args.train_labels, args.budgets)
    if args.command == 'account':
        return cmd_account(cfg, out_dir, args.norm_log, args.ledger, args.source)
    if args.command == 'calibrate':
        return cmd_calibrate(cfg, out_dir, args.epsilon, args.delta, args.clip_norm)
    return cmd_train_classifier(cfg, out_dir)


def save_divergence_checkpoints(error, out_dir):
    for name, net in (error.state or {}).items():
        path = os.path.join(out_dir, f'diverged_{name}.bdpn')
        save_model(net, path)
        error.checkpoints.append(path)


def execute(args):
    """Run one command inside a locked run directory; returns the report."""
    cfg = load_config(args.config, {'seed': args.seed})
    if args.threads:
        torch.set_num_threads(args.threads)
    set_seed(cfg.seed)
    os.makedirs(args.out_dir, exist_ok=True)
    rid = run_id(args.command, cfg)

    with FileLock(os.path.join(args.out_dir, '.lock'), timeout=0):
        wandb.init(project=cfg.wandb_project, name=f'{args.command}_{rid}', mode=cfg.wandb_mode,
                   config=config_echo(cfg))
        start = time.time()
        try:
            report = run_command(args, cfg)
        except NumericDivergence as e:
            save_divergence_checkpoints(e, args.out_dir)
            raise
        finally:
            wandb.finish()
        elapsed = time.time() - start
        report = {'run_id': rid, 'command': args.command, 'config': config_echo(cfg), **report,
                  'wall_clock_seconds': elapsed}
        report = write_report(report, os.path.join(args.out_dir, 'report.json'))
    print(f'{args.command} finished in {convert_seconds_to_hms(elapsed)}; report: '
          f'{os.path.join(args.out_dir, "report.json")}')
    return report


def main(argv=None):
    args = parse_args(argv)
    try:
        execute(args)
    except Timeout:
        print(f'error: run directory {args.out_dir} is locked by another process', file=sys.stderr)
        return 2
    except NumericDivergence as e:
        print(f'error: {e}; last good state saved to {", ".join(e.checkpoints) or "nowhere"}', file=sys.stderr)
        return e.exit_code
    except BDPError as e:
        print(f'error: {e}', file=sys.stderr)
        return e.exit_code
    except (ValueError, OSError) as e:
        print(f'error: {e}', file=sys.stderr)
        return 2
    return 0


if __name__ == '__main__':
    sys.exit(main())
