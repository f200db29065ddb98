# coding: utf-8
"""
lsm-transfer 命令行入口
潜在空间网络模型的迁移学习: 拟合、迁移、检测、模拟、预测
"""
import argparse
import logging
import sys
from pathlib import Path

import numpy as np
import pandas as pd

from __version__ import __version__
from config import config as config_presets
from config import load_config
from models.errors import ConfigError, LatentSpaceError
from services.cache_service import CacheService
from services.debias_service import CVConfig, default_lambda_grid, select_lambda
from services.detect_service import LAMBDA_POLICIES, detect_transferable
from services.experiment_service import SimulationPlan, run_simulation
from services.lsm_service import fit_single
from services.metrics_service import evaluate, holdout_experiment, summarize
from services.model_store import ModelStore
from services.pipeline_service import METHODS, PipelineSettings, run_method
from services.synth_service import (
    CASE_ALIASES,
    DELTA_CASES,
    SCENARIO_ALIASES,
    SIZE_SCENARIOS,
    GroundTruth,
    ScenarioConfig,
    generate_ensemble,
)
from services.transfer_service import fit_transfer
from services.worker_pool import WorkerPool
from utils.core_math import build_theta, sigmoid
from utils.edgelist import load_graph, load_problem, save_problem

logger = logging.getLogger('lsm_transfer')


# ============ 公共部分 ============

def _config_class(args):
    cfg = load_config(args.config, args.config_file)
    if args.config_file:
        print(f"✓ 已加载配置文件 {args.config_file}")
    return cfg


def _settings(args, cfg) -> PipelineSettings:
    return PipelineSettings.from_config(
        cfg,
        k=args.k,
        seed=args.seed,
        max_iter=args.max_iter,
        tol=args.tol,
        iota=getattr(args, 'iota', None),
        replicates=getattr(args, 'replicates', None),
        sample_fraction=getattr(args, 'fraction', None),
        lambda_policy=getattr(args, 'lambda_policy', None),
        lambda_value=getattr(args, 'lam', None),
        lambda_selection='cv' if getattr(args, 'cv', False) else None,
    )


def _provenance(args, settings: PipelineSettings) -> dict:
    """写入模型文件的配置快照"""
    arguments = {key: (str(value) if isinstance(value, Path) else value)
                 for key, value in vars(args).items() if key != 'func'}
    arguments = {key: ([str(v) for v in value] if isinstance(value, list) else value)
                 for key, value in arguments.items()}
    return {
        'arguments': arguments,
        'config': load_config(args.config, args.config_file).as_dict(),
        'fit': settings.fit.to_dict(),
        'lambda_selection': settings.lambda_selection,
        'lambda_value': settings.lambda_value,
    }


def _problem(args):
    alignments = args.alignment
    if alignments and len(alignments) != len(args.source):
        raise ConfigError('--alignment 的数量必须与 --source 相同')
    problem = load_problem(args.target, args.source, alignments)
    print(f"✓ 目标网络 {problem.n} 个节点, {problem.size} 个源网络")
    return problem


def _source_indices(problem, names_csv):
    """逗号分隔的源网络名称 -> 下标"""
    wanted = [name.strip() for name in names_csv.split(',') if name.strip()]
    unknown = [name for name in wanted if name not in problem.names]
    if unknown:
        raise ConfigError(f'未知的源网络: {", ".join(unknown)}')
    return [problem.names.index(name) for name in wanted]


def _save_model(args, command, labels, alpha, z, settings):
    store = ModelStore()
    success, message = store.save_model(args.out, labels, alpha, z, command=command,
                                        seed=settings.fit.seed,
                                        config=_provenance(args, settings))
    if not success:
        raise OSError(message)
    print(f"✓ 模型已写入 {args.out}")


def _save_table(path, table: pd.DataFrame):
    success, message = ModelStore().save_table(path, table)
    if not success:
        raise OSError(message)
    print(f"✓ 表格已写入 {path}")


def _print_metrics(truth_path, alpha, z, selected=None):
    success, payload = ModelStore().load_json(truth_path)
    if not success:
        raise OSError(payload)
    report = evaluate(GroundTruth.from_dict(payload), alpha, z, selected)
    for metric, value in report.as_rows().items():
        print(f"  {metric:<14}{value:.6f}")


def _print_detection(report):
    print(f"  基线损失 {report.baseline_loss:.4f}, σ̂ = {report.sigma_hat:.4f}, ι = {report.iota}")
    for l, name in enumerate(report.names):
        if l in report.failed:
            print(f"  ✗ {name:<16}失败")
            continue
        mark = '✓' if l in report.selected else ' '
        excess = report.per_source_loss[l] - report.baseline_loss
        print(f"  {mark} {name:<16}L̂ - L̂₀ = {excess:+.4f}")


def _save_report(args, report):
    store = ModelStore()
    success, message = store.save_json(args.report, report.to_dict())
    if not success:
        raise OSError(message)
    details = Path(args.report).with_suffix('.csv')
    _save_table(details, report.details)
    print(f"✓ 检测报告已写入 {args.report}")


# ============ 子命令 ============

def cmd_fit(args):
    """one-mode: 只用目标网络拟合"""
    cfg = _config_class(args)
    settings = _settings(args, cfg)
    graph = load_graph(args.target)
    print(f"✓ 目标网络 {graph.n} 个节点, {graph.edge_count} 条边")
    result = fit_single(graph, settings.fit)
    print(f"✓ 拟合完成: {result.iterations} 次迭代, 收敛={result.converged}")
    if args.truth:
        _print_metrics(args.truth, result.state.alpha, result.state.z)
    if args.out:
        _save_model(args, 'fit', graph.labels, result.state.alpha, result.state.z, settings)
    return 0


def cmd_transfer(args):
    """两阶段迁移: 给定可迁移源网络 (默认全部)"""
    cfg = _config_class(args)
    settings = _settings(args, cfg)
    problem = _problem(args)
    if args.transferable:
        indices = _source_indices(problem, args.transferable)
        result = run_method('TLK', problem, settings, informative=indices)
    else:
        result = run_method('TLB', problem, settings)
    print(f"✓ 迁移完成: 使用 {len(result.selected)} 个源网络, λ = {result.lam:.4g}")
    if args.truth:
        _print_metrics(args.truth, result.alpha_t, result.z_t)
    if args.out:
        _save_model(args, 'transfer', problem.target.labels, result.alpha_t, result.z_t, settings)
    return 0


def cmd_detect(args):
    """可迁移集合检测"""
    cfg = _config_class(args)
    settings = _settings(args, cfg)
    problem = _problem(args)
    report = detect_transferable(problem, settings.detect, settings.fit,
                                 settings.debias_config(1.0), pool=WorkerPool())
    print(f"✓ 检测完成: 选中 {', '.join(report.selected_names) or '(无)'}")
    _print_detection(report)
    if args.report:
        _save_report(args, report)
    return 0


def cmd_tld(args):
    """检测后迁移"""
    cfg = _config_class(args)
    settings = _settings(args, cfg)
    problem = _problem(args)
    result = run_method('TLD', problem, settings, pool=WorkerPool())
    report = result.detection
    _print_detection(report)
    print(f"✓ TLD 完成: 使用 {len(result.selected)} 个源网络")
    if args.report:
        _save_report(args, report)
    if args.truth:
        _print_metrics(args.truth, result.alpha_t, result.z_t, report.selected)
    if args.out:
        _save_model(args, 'tld', problem.target.labels, result.alpha_t, result.z_t, settings)
    return 0


def _scenario(args, cfg) -> ScenarioConfig:
    return ScenarioConfig.from_config(
        cfg,
        n=args.n,
        L=args.sources,
        a_size=args.a,
        k=args.k,
        size_scenario=args.scenario,
        delta_case=args.delta_case,
        seed=args.seed,
    )


def cmd_simulate(args):
    """模拟实验: 生成数据 + 全部方法 + 汇总表"""
    cfg = _config_class(args)
    settings = _settings(args, cfg)
    scenario = _scenario(args, cfg)
    methods = tuple(args.methods.split(',')) if args.methods else METHODS
    plan = SimulationPlan(scenario=scenario, settings=settings,
                          replicates=args.reps or cfg.SIM_REPS, methods=methods)
    cache = CacheService(args.cache) if args.cache else None
    print(f"✓ 场景 {scenario.size_scenario}/{scenario.delta_case}, n={scenario.n}, "
          f"|A|={scenario.a_size}, 重复 {plan.replicates} 次")
    summary, replicates = run_simulation(plan, pool=WorkerPool(), cache=cache,
                                         rebuild_cache=args.rebuild_cache)
    if args.out:
        _save_table(args.out, summary)
    else:
        print(summary.to_string(index=False))
    if args.replicates_out:
        _save_table(args.replicates_out, replicates)
    return 0


def cmd_generate(args):
    """写出一个模拟数据集 (边列表 + 真值)"""
    cfg = _config_class(args)
    scenario = _scenario(args, cfg)
    problem, truth = generate_ensemble(scenario)
    paths = save_problem(problem, args.out_dir)
    payload = truth.to_dict()
    payload['scenario'] = scenario.to_dict()
    success, message = ModelStore().save_json(Path(args.out_dir) / 'truth.json', payload)
    if not success:
        raise OSError(message)
    print(f"✓ 目标网络: {paths['target']} (密度 {problem.target.density:.4f})")
    print(f"✓ {len(paths['sources'])} 个源网络, 可迁移: "
          f"{', '.join(problem.names[l] for l in truth.informative_indices) or '(无)'}")
    return 0


def cmd_predict(args):
    """导出连边概率，或运行留出预测实验"""
    if args.model:
        success, payload = ModelStore().load_model(args.model)
        if not success:
            raise OSError(payload)
        labels = payload['labels']
        prob = sigmoid(build_theta(payload['alpha'], payload['z']))
        rows, cols = np.triu_indices(len(labels), 1)
        table = pd.DataFrame({
            'u': [labels[i] for i in rows],
            'v': [labels[j] for j in cols],
            'p': prob[rows, cols],
        })
        if args.out:
            _save_table(args.out, table)
        else:
            print(table.to_string(index=False))
        return 0

    if not args.target or not args.source:
        raise ConfigError('predict 需要 --model，或者同时给出 --target 与 --source')
    cfg = _config_class(args)
    settings = _settings(args, cfg)
    problem = _problem(args)
    informative = None
    if args.method == 'TLK':
        if not args.transferable:
            raise ConfigError('TLK 需要 --transferable')
        informative = _source_indices(problem, args.transferable)
    tables = []
    for ratio in args.missing or [cfg.HOLDOUT_MISSING]:
        table = holdout_experiment(problem, args.method, ratio, args.repeats or cfg.HOLDOUT_REPEATS,
                                   settings, seed=settings.fit.seed, informative=informative,
                                   pool=WorkerPool())
        mean, sd = summarize(table['brier'].tolist())
        print(f"✓ {args.method} p={ratio}: Brier {mean:.4f} ({sd:.4f})")
        tables.append(table)
    if args.out:
        _save_table(args.out, pd.concat(tables, ignore_index=True))
    return 0


def cmd_cv_lambda(args):
    """交叉验证选择 λ"""
    cfg = _config_class(args)
    settings = _settings(args, cfg)
    problem = _problem(args)
    transfer = fit_transfer(problem, settings.fit)
    grid = args.grid or cfg.LAMBDA_GRID or default_lambda_grid(problem.n)
    cv = CVConfig(folds=args.folds or cfg.CV_FOLDS, seed=settings.fit.seed)
    best, table = select_lambda(problem.target, transfer.u0, grid, cv,
                                cfg=settings.debias_config(1.0), pool=WorkerPool(),
                                return_table=True)
    print(f"✓ 选中 λ = {best:.6g}")
    if not table.empty:
        means = table.groupby('lam')['loss'].mean()
        for lam, loss in means.items():
            mark = '*' if lam == best else ' '
            print(f"  {mark} λ = {lam:<12.4g} 留出损失 {loss:.4f}")
    if args.out:
        _save_table(args.out, table)
    return 0


# ============ 参数解析 ============

def _scenario_name(value):
    value = SCENARIO_ALIASES.get(value, value)
    if value not in SIZE_SCENARIOS:
        raise argparse.ArgumentTypeError(f'可选: 1/2/3 或 {", ".join(SIZE_SCENARIOS)}')
    return value


def _case_name(value):
    value = CASE_ALIASES.get(value.lower(), value)
    if value not in DELTA_CASES:
        raise argparse.ArgumentTypeError(f'可选: i/ii/iii 或 {", ".join(DELTA_CASES)}')
    return value


def _add_common(parser):
    parser.add_argument('--config', default='default', choices=sorted(config_presets),
                        help='预设配置')
    parser.add_argument('--config-file', type=Path, help='YAML 配置文件，覆盖预设')
    parser.add_argument('--seed', type=int, help='随机种子')
    parser.add_argument('-k', type=int, help='潜在维度')
    parser.add_argument('--max-iter', type=int, help='最大迭代次数')
    parser.add_argument('--tol', type=float, help='相对目标函数变化的停止阈值')
    parser.add_argument('-v', '--verbose', action='count', default=0, help='日志详细程度')


def _add_problem(parser, required=True):
    parser.add_argument('--target', type=Path, required=required, help='目标网络边列表')
    parser.add_argument('--source', type=Path, action='append', required=required,
                        help='源网络边列表 (可重复)')
    parser.add_argument('--alignment', type=Path, action='append',
                        help='对齐文件，与 --source 一一对应 (缺省按标签匹配)')


def _add_lambda(parser):
    parser.add_argument('--lambda', dest='lam', type=float,
                        help='核范数惩罚系数 (缺省 LAMBDA_SCALE·n，检测中为 DETECT_LAMBDA_SCALE·n)')
    parser.add_argument('--cv', action='store_true', help='交叉验证选择 λ')


def _add_detect(parser):
    parser.add_argument('--iota', type=float, help='阈值系数 ι')
    parser.add_argument('--replicates', type=int, help='重复次数 R')
    parser.add_argument('--fraction', type=float, help='训练节点对比例')
    parser.add_argument('--lambda-policy', choices=LAMBDA_POLICIES, help='检测中 λ 的选择方式')


def _add_scenario(parser):
    parser.add_argument('--scenario', type=_scenario_name, help='源网络规模场景')
    parser.add_argument('--delta-case', type=_case_name, help='δ 情形')
    parser.add_argument('--n', type=int, help='目标网络节点数')
    parser.add_argument('--sources', type=int, help='源网络个数 L')
    parser.add_argument('--a', type=int, help='可迁移源网络个数 |A|')


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog='lsm-transfer',
        description='潜在空间网络模型的迁移学习')
    parser.add_argument('--version', action='version', version=f'%(prog)s {__version__}')
    sub = parser.add_subparsers(dest='command', required=True)

    p = sub.add_parser('fit', help='one-mode 单网络拟合')
    _add_common(p)
    p.add_argument('--target', type=Path, required=True, help='目标网络边列表')
    p.add_argument('--truth', type=Path, help='真值文件 (generate 输出)')
    p.add_argument('--out', type=Path, help='模型输出文件')
    p.set_defaults(func=cmd_fit)

    p = sub.add_parser('transfer', help='两阶段迁移 (给定可迁移集合)')
    _add_common(p)
    _add_problem(p)
    _add_lambda(p)
    p.add_argument('--transferable', help='可迁移源网络名称，逗号分隔 (缺省全部)')
    p.add_argument('--truth', type=Path, help='真值文件')
    p.add_argument('--out', type=Path, help='模型输出文件')
    p.set_defaults(func=cmd_transfer)

    p = sub.add_parser('detect', help='可迁移集合检测')
    _add_common(p)
    _add_problem(p)
    _add_lambda(p)
    _add_detect(p)
    p.add_argument('--report', type=Path, help='检测报告 (JSON，明细写入同名 CSV)')
    p.set_defaults(func=cmd_detect)

    p = sub.add_parser('tld', help='检测后迁移')
    _add_common(p)
    _add_problem(p)
    _add_lambda(p)
    _add_detect(p)
    p.add_argument('--report', type=Path, help='检测报告')
    p.add_argument('--truth', type=Path, help='真值文件')
    p.add_argument('--out', type=Path, help='模型输出文件')
    p.set_defaults(func=cmd_tld)

    p = sub.add_parser('simulate', help='模拟实验')
    _add_common(p)
    _add_scenario(p)
    _add_lambda(p)
    _add_detect(p)
    p.add_argument('--reps', type=int, help='重复次数')
    p.add_argument('--methods', help=f'逗号分隔的方法 (缺省 {",".join(METHODS)})')
    p.add_argument('--out', type=Path, help='汇总表 CSV')
    p.add_argument('--replicates-out', type=Path, help='逐次重复表 CSV')
    p.add_argument('--cache', type=Path, help='SQLite 结果缓存，可中断续跑')
    p.add_argument('--rebuild-cache', action='store_true', help='清除该配置的缓存结果')
    p.set_defaults(func=cmd_simulate)

    p = sub.add_parser('generate', help='写出模拟数据集')
    _add_common(p)
    _add_scenario(p)
    p.add_argument('--out-dir', type=Path, required=True, help='输出目录')
    p.set_defaults(func=cmd_generate)

    p = sub.add_parser('predict', help='导出连边概率或运行留出实验')
    _add_common(p)
    _add_problem(p, required=False)
    _add_lambda(p)
    _add_detect(p)
    p.add_argument('--model', type=Path, help='模型文件，导出全部节点对的连边概率')
    p.add_argument('--method', choices=METHODS, default='TLD', help='留出实验的方法')
    p.add_argument('--transferable', help='TLK 的可迁移源网络名称')
    p.add_argument('--missing', type=float, nargs='+', help='留出比例 (缺省 HOLDOUT_MISSING)')
    p.add_argument('--repeats', type=int, help='重复次数')
    p.add_argument('--out', type=Path, help='输出 CSV')
    p.set_defaults(func=cmd_predict)

    p = sub.add_parser('cv-lambda', help='交叉验证选择 λ')
    _add_common(p)
    _add_problem(p)
    p.add_argument('--grid', type=float, nargs='+', help='候选 λ (缺省 11 点对数网格)')
    p.add_argument('--folds', type=int, help='折数')
    p.add_argument('--out', type=Path, help='交叉验证明细 CSV')
    p.set_defaults(func=cmd_cv_lambda)

    return parser


# ============ 主程序入口 ============

def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)

    level = logging.WARNING - 10 * min(args.verbose, 2)
    logging.basicConfig(level=level, format='%(asctime)s %(levelname)s %(name)s: %(message)s')

    try:
        return args.func(args)
    except (LatentSpaceError, OSError) as e:
        logger.debug('命令 %s 失败', args.command, exc_info=True)
        print(f"✗ {e}", file=sys.stderr)
        return 1


if __name__ == '__main__':
    sys.exit(main())
