"""
Workflow Executor
Executes the steps of a plan built by the Planning Agent

Handles:
- Ordering (Kahn's topological sort on step dependencies)
- Skipping steps whose dependencies failed
- Partial failure: a failed step never stops the run
"""
import logging
import time
from collections import defaultdict
from typing import Any, Callable, Dict, List, Optional

logger = logging.getLogger(__name__)

StepCallback = Callable[[Dict[str, Any], Dict[str, Any]], None]


class WorkflowExecutor:
    """
    Execute agent workflow with dependency management

    Example workflow:
    Step 1: Locate the benefit peak          }
    Step 6: Theorem 1 on a narrow interval   } independent
    Step 7: Theorem 2 (reuses the peak of step 1)
    Step 16: f_x levels (reads the report of step 7)
    """

    def __init__(self, agent_registry: Dict):
        """
        Args:
            agent_registry: Dict mapping agent_id → agent instance
                           e.g., {'condition': condition_agent, ...}
        """
        self.agents = agent_registry

    def execute(self, plan: Dict, on_step: Optional[StepCallback] = None) -> Dict[str, Any]:
        """
        Execute entire workflow

        Args:
            plan: Execution plan from the Planning Agent
            on_step: called with (step, result) after every step, skipped ones included

        Returns:
            Dict with step results and counts
        """
        plan_id = plan.get('plan_id')
        steps = plan.get('steps', [])
        logger.info(f"Executing workflow {plan_id}: {len(steps)} steps")

        start_time = time.time()
        step_results: Dict[int, Dict[str, Any]] = {}

        for step in self._topological_sort(steps):
            step_num = step['step']
            logger.info(f"Step {step_num}/{len(steps)}: {step['agent']} → {step['task']}")

            if not self._check_dependencies(step, step_results):
                logger.warning(f"Step {step_num} skipped (dependency failed)")
                step_results[step_num] = {'status': 'skipped', 'reason': 'dependency_failed'}
            else:
                try:
                    step_results[step_num] = self._execute_step(step, step_results)
                except Exception as e:
                    logger.error(f"Step {step_num} raised: {e}")
                    step_results[step_num] = {'status': 'failed', 'error': str(e)}

                if step_results[step_num]['status'] != 'success':
                    logger.error(f"Step {step_num} failed: {step_results[step_num].get('error')}")

            if on_step is not None:
                on_step(step, step_results[step_num])

        total_time = time.time() - start_time
        success = all(
            r.get('status') == 'success'
            for r in step_results.values()
            if r.get('status') != 'skipped'
        )

        result = {
            'plan_id': plan_id,
            'success': success,
            'step_results': step_results,
            'total_steps': len(steps),
            'completed_steps': sum(1 for r in step_results.values() if r.get('status') == 'success'),
            'failed_steps': sum(1 for r in step_results.values() if r.get('status') == 'failed'),
            'skipped_steps': sum(1 for r in step_results.values() if r.get('status') == 'skipped'),
            'execution_time': round(total_time, 2),
        }

        logger.info(
            f"Workflow completed in {total_time:.1f}s: "
            f"{result['completed_steps']}/{len(steps)} steps succeeded"
        )
        return result

    def _check_dependencies(self, step: Dict, step_results: Dict) -> bool:
        """Check if all dependencies completed successfully"""
        return all(
            step_results.get(dep, {}).get('status') == 'success'
            for dep in step.get('dependencies', [])
        )

    def _execute_step(self, step: Dict, step_results: Dict) -> Dict[str, Any]:
        """Execute a single step"""
        agent = self.agents.get(step['agent'])
        if not agent:
            raise ValueError(f"Agent not found: {step['agent']}")

        agent_input = {
            'task': step['task'],
            'params': step.get('params', {}),
            # upstream envelopes, keyed by step number
            'dependency_results': {dep: step_results[dep] for dep in step.get('dependencies', [])},
        }
        return agent.run(agent_input)

    def _topological_sort(self, steps: List[Dict]) -> List[Dict]:
        """
        Sort steps by dependencies (Kahn's algorithm)

        Ties keep plan order, so the run order is deterministic
        """
        in_degree = {s['step']: 0 for s in steps}
        graph = defaultdict(list)

        for step in steps:
            for dep in step.get('dependencies', []):
                graph[dep].append(step['step'])
                in_degree[step['step']] += 1

        queue = [s for s in in_degree if in_degree[s] == 0]
        sorted_steps = []

        while queue:
            step_num = queue.pop(0)
            sorted_steps.append(next(s for s in steps if s['step'] == step_num))

            for neighbor in graph[step_num]:
                in_degree[neighbor] -= 1
                if in_degree[neighbor] == 0:
                    queue.append(neighbor)

        if len(sorted_steps) != len(steps):
            raise ValueError("Circular dependency detected in workflow")

        return sorted_steps
