import logging
from pathlib import Path
from typing import Dict, List, Sequence

from tapersim import __version__
from tapersim.core.config import Config
from tapersim.core.dependency_graph import DependencyGraph
from tapersim.core.logging import timed
from tapersim.experiments import EXPERIMENTS, Experiment, RunContext
from tapersim.inscription import load_material, model_digest, save_params

META_FILENAME = "run.meta"
PARAMS_FILENAME = "inscription.yaml"


class ExperimentRunner:
    def __init__(self, config: Config):
        self.config = config
        self.report: Dict[str, Dict[str, List[str]]] = {}
        self.context = RunContext(output_dir=Path(config.output_dir))
        self.experiments: Dict[str, Experiment] = {}

    def experiment(self, name: str) -> Experiment:
        if name not in self.experiments:
            if name not in EXPERIMENTS:
                raise ValueError(f"unknown experiment {name!r}; choose from {sorted(EXPERIMENTS)}")
            self.experiments[name] = EXPERIMENTS[name](self.config, self.context, self.report)
        return self.experiments[name]

    def resolve(self, names: Sequence[str]) -> List[str]:
        """Requested experiments plus their prerequisites, prerequisites first."""
        graph = DependencyGraph()
        pending = list(names)
        seen = set()
        while pending:
            name = pending.pop()
            if name in seen:
                continue
            seen.add(name)
            prerequisites = self.experiment(name).prerequisites
            graph.add_node(name, prerequisites)
            pending.extend(prerequisites)
        return graph.get_execution_order()

    @timed
    def run(self, names: Sequence[str]) -> Dict[str, Path]:
        self.config.validate()
        self.context.output_dir.mkdir(parents=True, exist_ok=True)
        save_params(self.config.inscription, self.context.output_dir / PARAMS_FILENAME)
        material = self.config.material_path()
        if material is not None:
            self.context.model = load_material(material)

        order = self.resolve(names)
        logging.info(f"Experiment execution order: {order}")
        try:
            for name in order:
                logging.info(f"[{name}] starting", extra={"experiment": name})
                self.experiment(name).run()
        finally:
            self.write_meta(order)
        return dict(self.context.outputs)

    def write_meta(self, order: Sequence[str]) -> Path:
        """Provenance of the outputs: hashes, inscription parameters and written files."""
        model = self.context.model
        lines = [
            f"tapersim_version={__version__}",
            f"config_sha256={self.config.digest()}",
            f"model_sha256={model_digest(model) if model is not None else 'none'}",
            f"inscription={PARAMS_FILENAME}",
            f"experiments={','.join(order)}",
        ]
        lines += [f"output.{name}={path.name}" for name, path in sorted(self.context.outputs.items())]
        path = self.context.output_dir / META_FILENAME
        path.write_text("\n".join(lines) + "\n", encoding="ascii")
        return path

    def print_report(self):
        print('\n=== tapersim Run Report ===')
        for name, results in self.report.items():
            print(f"\nExperiment: {name}")
            print('  Written:')
            if results['written']:
                for item in results['written']:
                    print(f"    - {item}")
            else:
                print('    None')
            print('  Failed:')
            if results['failed']:
                for item in results['failed']:
                    print(f"    - {item}")
            else:
                print('    None')
