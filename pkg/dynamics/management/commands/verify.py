"""
Management command to run the inequality suite of a config
"""
from dataclasses import replace

from dynamics.models import TaskKind

from ._experiment import ExperimentCommand


class Command(ExperimentCommand):
    help = 'Check every inequality chain on the systems and measures of a config'

    def add_arguments(self, parser):
        parser.add_argument('config', help='Path to a YAML experiment config')
        super().add_arguments(parser)

    def handle(self, *args, **options):
        config = self.load_config(options['config'], options)
        self.run_config(replace(config, tasks=(TaskKind.VERIFY,)), jobs=options['jobs'])
