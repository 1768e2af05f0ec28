"""
MIT License

Copyright (c) 2024-present ressf developers

Permission is hereby granted, free of charge, to any person obtaining a copy
of this software and associated documentation files (the "Software"), to deal
in the Software without restriction, including without limitation the rights
to use, copy, modify, merge, publish, distribute, sublicense, and/or sell
copies of the Software, and to permit persons to whom the Software is
furnished to do so, subject to the following conditions:

The above copyright notice and this permission notice shall be included in all
copies or substantial portions of the Software.

THE SOFTWARE IS PROVIDED "AS IS", WITHOUT WARRANTY OF ANY KIND, EXPRESS OR
IMPLIED, INCLUDING BUT NOT LIMITED TO THE WARRANTIES OF MERCHANTABILITY,
FITNESS FOR A PARTICULAR PURPOSE AND NONINFRINGEMENT. IN NO EVENT SHALL THE
AUTHORS OR COPYRIGHT HOLDERS BE LIABLE FOR ANY CLAIM, DAMAGES OR OTHER
LIABILITY, WHETHER IN AN ACTION OF CONTRACT, TORT OR OTHERWISE, ARISING FROM,
OUT OF OR IN CONNECTION WITH THE SOFTWARE OR THE USE OR OTHER DEALINGS IN THE
SOFTWARE.
"""

from __future__ import annotations

import argparse
import asyncio
import dataclasses
import logging
import sys
from concurrent.futures import ProcessPoolExecutor
from functools import partial
from os import getenv
from typing import Any, Callable, Dict, List, Optional, Sequence

from dotenv import load_dotenv

from launcher.scanner import (
    INDEX_COLUMNS,
    LARGE_COUPLING_COLUMNS,
    SSF_COLUMNS,
    ScanConfig,
    cantor_row,
    index_rows,
    ssf_row,
    write_report,
)
from launcher.selftest import run_suites
from Ressf.Cantor import CANTOR_COLUMNS, CantorRow, build_svc, discretize, sample_lambdas, summarize
from Ressf.errors import ModelValidationError
from Ressf.Operators import FramedModel, load_model
from Ressf.utils import human_join

load_dotenv()

logging.basicConfig(
    level=getenv("RESSF_LOG_LEVEL", "INFO").upper(),
    format="[{asctime}] [{levelname:<7}] {name}: {message}",
    style="{",
    datefmt="%Y-%m-%d %H:%M:%S",
)

ERROR_COLUMNS = ("error", "code", "message")
SELFTEST_COLUMNS = ("name", "passed", "checked", "failed", "worst")


class Launcher:
    """Runs one subcommand over its grid and writes the report"""

    def __init__(self, config: ScanConfig) -> None:
        self.__logger = logging.getLogger("Launcher")
        self.__config = config

    @property
    def logger(self) -> logging.Logger:
        return self.__logger

    @property
    def config(self) -> ScanConfig:
        return self.__config

    @property
    def output(self) -> str:
        return self.__config.output or f"ressf-{self.__config.command}.{self.__config.format}"

    async def map(self, func: Callable[..., Any], jobs: Sequence[tuple]) -> List[Any]:
        """Results in job order, however the pool completes them"""
        if self.__config.workers == 1 or len(jobs) < 2:
            return [func(*job) for job in jobs]
        loop = asyncio.get_running_loop()
        with ProcessPoolExecutor(max_workers=self.__config.workers) as pool:
            futures = [loop.run_in_executor(pool, partial(func, *job)) for job in jobs]
            return list(await asyncio.gather(*futures))

    def load(self) -> FramedModel:
        model, extras = load_model(self.__config.model_path)
        updates: Dict[str, Any] = {}
        if not self.__config.lambdas:
            if extras.lam is None:
                raise ModelValidationError("no lambda grid on the command line or in the model file", field="lambda")
            updates["lambda_list"] = (extras.lam,)
        if self.__config.interval is None:
            if extras.interval is None:
                raise ModelValidationError("no interval on the command line or in the model file", field="interval")
            updates["interval"] = extras.interval
        if updates:
            self.__config = dataclasses.replace(self.__config, **updates)
        return model

    async def run_index(self) -> int:
        model = self.load()
        config = self.__config
        jobs = [(model, lam, config.interval, config.y0) for lam in config.lambdas]
        rows = [row for batch in await self.map(index_rows, jobs) for row in batch]
        write_report(rows, INDEX_COLUMNS, self.output, config)
        self.__logger.info("wrote %d rows to %s", len(rows), self.output)
        return 0

    async def run_ssf(self) -> int:
        model = self.load()
        config = self.__config
        jobs = [
            (model, lam, config.interval, config.y0, config.large_coupling, config.grid_step)
            for lam in config.lambdas
        ]
        rows = await self.map(ssf_row, jobs)
        columns = SSF_COLUMNS[:-3] + (LARGE_COUPLING_COLUMNS if config.large_coupling else ()) + ERROR_COLUMNS
        write_report(rows, columns, self.output, config)
        self.__logger.info("wrote %d rows to %s", len(rows), self.output)
        return 0

    async def run_cantor(self) -> int:
        config = self.__config
        cantor = build_svc(config.depth)
        samples = sample_lambdas(cantor, config.samples, config.seed)
        model = discretize(cantor, config.nodes)
        rows = await self.map(cantor_row, [(model, lam, config.y, config.nodes) for lam in samples])
        finished = [CantorRow.from_values(row) for row in rows if "error" not in row]
        summary = summarize(finished)
        payload = {
            "samples": summary.samples,
            "failed": len(rows) - len(finished),
            "index_fraction": summary.index_fraction,
            "positive_fraction": summary.positive_fraction,
            "infinite": summary.infinite,
        }
        write_report(rows, CANTOR_COLUMNS + ERROR_COLUMNS, self.output, config, summary=payload)
        self.__logger.info(
            "depth %d: index +1 on %.3f of the samples, r0 > 0 on %.3f",
            config.depth,
            summary.index_fraction,
            summary.positive_fraction,
        )
        print(f"index_fraction={summary.index_fraction!r} positive_fraction={summary.positive_fraction!r}")
        return 0

    async def run_selftest(self) -> int:
        config = self.__config
        results = run_suites(config.seed, config.models)
        rows = [result.to_dict() for result in results]
        passed = all(result.passed for result in results)
        write_report(rows, SELFTEST_COLUMNS, self.output, config, summary={"passed": passed})
        if not passed:
            failed = [result.name for result in results if not result.passed]
            self.__logger.error("failed suites: %s", human_join(failed, final="and"))
        return 0 if passed else 1

    async def run(self) -> int:
        runners = {
            "index": self.run_index,
            "ssf": self.run_ssf,
            "cantor": self.run_cantor,
            "selftest": self.run_selftest,
        }
        try:
            return await runners[self.__config.command]()
        except ModelValidationError as e:
            self.__logger.error("invalid input (%s): %s", e.field, e.message)
            return 2


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="ressf", description="Resonance index and singular spectral shift scans")
    sub = parser.add_subparsers(dest="command", required=True)

    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--out", help="report path (default ressf-<command>.<format>)")
    common.add_argument("--format", choices=("csv", "json"), default="csv")
    common.add_argument("--seed", type=int, default=0)
    common.add_argument("--workers", type=int, default=None, help="worker processes (default $RESSF_WORKERS or 1)")
    common.add_argument("--verbose", action="store_true")

    grid = argparse.ArgumentParser(add_help=False)
    grid.add_argument("--model", required=True, help="JSON model file")
    grid.add_argument("--lambda-min", type=float)
    grid.add_argument("--lambda-max", type=float)
    grid.add_argument("--lambda-count", type=int, default=1)
    grid.add_argument("--lambdas", type=float, nargs="+", help="explicit lambda list")
    grid.add_argument("--interval", type=float, nargs=2, metavar=("A", "B"), help="coupling interval [A, B]")
    grid.add_argument("--y0", type=float, help="first y of the schedule")

    sub.add_parser("index", parents=[common, grid], help="resonance index per lambda")
    ssf = sub.add_parser("ssf", parents=[common, grid], help="xi = xi_a + xi_s per lambda")
    ssf.add_argument("--large-coupling", action="store_true")

    cantor = sub.add_parser("cantor", parents=[common], help="fat Cantor set example")
    cantor.add_argument("--depth", type=int, default=6)
    cantor.add_argument("--nodes", type=int, default=32)
    cantor.add_argument("--samples", type=int, default=100)
    cantor.add_argument("--y", type=float, default=1e-4)

    selftest = sub.add_parser("selftest", parents=[common], help="oracle suites on seeded random models")
    selftest.add_argument("--models", type=int, default=20)
    return parser


RENAMED_OPTIONS = {"model": "model_path", "lambdas": "lambda_list", "out": "output"}
SCAN_FIELDS = frozenset(field.name for field in dataclasses.fields(ScanConfig))


def config_from_args(args: argparse.Namespace) -> ScanConfig:
    """Parsed flags as given; flags a subcommand lacks (or left unset) keep the ScanConfig default"""
    options: Dict[str, Any] = {}
    for key, value in vars(args).items():
        name = RENAMED_OPTIONS.get(key, key)
        if value is None or name not in SCAN_FIELDS:
            continue
        options[name] = tuple(value) if name in ("lambda_list", "interval") else value
    return ScanConfig(**options)


def main(argv: Optional[Sequence[str]] = None) -> int:
    args = build_parser().parse_args(argv)
    if args.verbose:
        logging.getLogger().setLevel(logging.DEBUG)
    try:
        config = config_from_args(args)
    except ModelValidationError as e:
        logging.getLogger("Launcher").error("invalid configuration (%s): %s", e.field, e.message)
        return 2
    return asyncio.run(Launcher(config).run())


if __name__ == "__main__":
    sys.exit(main())
