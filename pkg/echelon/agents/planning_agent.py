"""
Planning Agent
Builds the fixed reproduction plan: curves, condition reports and residual
scans for the goose case, with the dependencies between them.
"""
from typing import Any, Dict, List, Optional

from echelon.config.run_config import RunConfig
from .base_agent import BaseAgent
from .state_schema import IntervalSpec

# (alpha_s, alpha_l) of the three interval cases
NARROW = IntervalSpec(alpha_s=0.5, alpha_l=3.5)
SHIFTED = IntervalSpec(alpha_s=2.5, alpha_l=7.0)
WIDE = IntervalSpec(alpha_s=0.5, alpha_l=14.0)


class PlanningAgent(BaseAgent):
    """
    Decides what the reproduce run computes and in what order

    Every step carries:
    - step / agent / task / params / dependencies (executor contract)
    - name: output file stem
    - description: what the output shows
    """

    def __init__(self, config: Optional[Dict] = None):
        super().__init__("planning", config)
        self.available_agents = ('condition', 'curve', 'equilibrium')

    def validate_input(self, input_data: Dict[str, Any]) -> bool:
        """Validate we have a run configuration"""
        return isinstance(input_data, dict) and isinstance(input_data.get('config'), RunConfig)

    def execute(self, input_data: Dict[str, Any]) -> Dict[str, Any]:
        plan = self._validate_plan(self.build_plan(input_data['config']))
        self.logger.info(f"Reproduction plan with {len(plan['steps'])} steps")
        return {'plan': plan}

    def build_plan(self, config: RunConfig) -> Dict[str, Any]:
        f = config.build_benefit()
        beta = config.resolved_beta
        b = config.wake_params().b
        common = {
            'benefit': f,
            'beta': beta,
            'step': config.resolved_grid_step,
            'tol': config.tolerance,
        }
        curve = {
            'benefit': f,
            'beta': beta,
            'x_range': (-20 * b, 20 * b),
            'step': 10 * config.resolved_grid_step,
        }
        scan = {'benefit': f, 'beta': beta, 'scan_step': config.scan_step}

        steps: List[Dict[str, Any]] = [
            self._step(1, 'condition', 'peak', 'peak', "maximum of f(x, -beta) over the negative axis", common),
            self._step(2, 'curve', 'curve', 'curve_f_y1', "f(x, -beta)", {**curve, 'which': 'f', 'y_multiple': 1}),
            self._step(3, 'curve', 'curve', 'curve_f_y2', "f(x, -2 beta)", {**curve, 'which': 'f', 'y_multiple': 2}),
            self._step(4, 'curve', 'curve', 'curve_fx_y1', "f_x(x, -beta)", {**curve, 'which': 'fx', 'y_multiple': 1}),
            self._step(5, 'curve', 'curve', 'curve_fx_y2', "f_x(x, -2 beta)", {**curve, 'which': 'fx', 'y_multiple': 2}),
            self._step(6, 'condition', 'thm1', 'thm1_narrow',
                       "n = 2 condition on the direct slopes, P = [-3.5, -0.5]", {**common, 'interval': NARROW}),
            self._step(7, 'condition', 'thm2', 'thm2_shifted',
                       "n = 2 condition over Q(2P), P = [-7, -2.5]", {**common, 'interval': SHIFTED}, [1]),
            self._step(8, 'condition', 'thm3', 'thm3_wide',
                       "n = 2 condition over Q([-2 alpha_l, -2 alpha]), P = [-14, -0.5]",
                       {**common, 'interval': WIDE}, [1]),
            self._step(9, 'condition', 'prop1', 'prop1_narrow',
                       "n >= 3 direct-slope condition, P = [-3.5, -0.5]", {**common, 'interval': NARROW}),
            self._step(10, 'condition', 'prop3', 'prop3_wide',
                       "n >= 3 condition over Q([-2 alpha_l, -2 alpha]), P = [-14, -0.5]",
                       {**common, 'interval': WIDE}, [1]),
            self._step(11, 'condition', 'ce', 'ce_wide',
                       "cooperative condition, P = [-14, -0.5]",
                       {**common, 'interval': WIDE, 'beta_lower': config.resolved_beta_lower,
                        'y_max_factor': config.y_max_factor}),
            self._step(12, 'condition', 'lemma1', 'lemma1_wide',
                       "closed-form alpha_l bound for the wake benefit",
                       {**common, 'interval': WIDE, 'beta_lower': config.resolved_beta_lower}),
            self._step(13, 'equilibrium', 'scan_ne', 'scan_ne_narrow',
                       "n = 2 NE residual minimum over P x P, P = [-3.5, -0.5]", {**scan, 'interval': NARROW}),
            self._step(14, 'equilibrium', 'scan_ne', 'scan_ne_wide',
                       "n = 2 NE residual minimum over P x P, P = [-14, -0.5]", {**scan, 'interval': WIDE}),
            self._step(15, 'equilibrium', 'scan_ce', 'scan_ce_wide',
                       "last-agent CE gradient minimum over P x P, P = [-14, -0.5]",
                       {**scan, 'interval': WIDE, 'n': 3}),
            self._step(16, 'curve', 'levels', 'levels_thm2_shifted',
                       "f_x(x, -beta) and f_x(x, -2 beta) over [I_lo, alpha_l] with the step 7 levels",
                       common, [7]),
            self._step(17, 'curve', 'levels', 'levels_thm3_wide',
                       "f_x(x, -beta) and f_x(x, -2 beta) over [I_lo, alpha_l] with the step 8 levels",
                       common, [8]),
        ]
        return {'plan_id': 'reproduce', 'steps': steps}

    @staticmethod
    def _step(number: int, agent: str, task: str, name: str, description: str,
              params: Dict[str, Any], dependencies: Optional[List[int]] = None) -> Dict[str, Any]:
        return {
            'step': number,
            'agent': agent,
            'task': task,
            'name': name,
            'description': description,
            'params': params,
            'dependencies': dependencies or [],
        }

    def _validate_plan(self, plan: Dict) -> Dict:
        """Validate plan structure and dependencies"""
        numbers = set()
        for step in plan.get('steps', []):
            if 'step' not in step or 'agent' not in step or 'task' not in step:
                raise ValueError(f"Invalid step structure: {step}")
            if step['agent'] not in self.available_agents:
                raise ValueError(f"Unknown agent: {step['agent']}")
            for dep in step.get('dependencies', []):
                if dep >= step['step']:
                    raise ValueError(f"Step {step['step']} cannot depend on future step {dep}")
            numbers.add(step['step'])
        if len(numbers) != len(plan.get('steps', [])):
            raise ValueError("Duplicate step numbers in plan")
        return plan
