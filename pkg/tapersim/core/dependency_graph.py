import heapq
import logging
from typing import Dict, List, Set


class DependencyGraph:
    """Orders experiments so every prerequisite runs first (Kahn's algorithm).

    Ready experiments leave the heap in name order, so the same request always
    resolves to the same sequence.
    """

    def __init__(self):
        self.nodes: Set[str] = set()
        self.prerequisites: Dict[str, List[str]] = {}  # node -> prerequisites

    def add_node(self, name: str, prerequisites: List[str]):
        self.nodes.add(name)
        self.prerequisites[name] = list(prerequisites)
        self.nodes.update(prerequisites)

    def dependents(self) -> Dict[str, List[str]]:
        """Edge map prerequisite -> experiments waiting on it."""
        edges: Dict[str, List[str]] = {node: [] for node in self.nodes}
        for node, prereqs in self.prerequisites.items():
            for prereq in prereqs:
                edges[prereq].append(node)
        return edges

    def get_execution_order(self) -> List[str]:
        edges = self.dependents()
        waiting = {node: len(self.prerequisites.get(node, [])) for node in self.nodes}
        ready = [node for node, count in waiting.items() if count == 0]
        heapq.heapify(ready)

        order: List[str] = []
        while ready:
            node = heapq.heappop(ready)
            order.append(node)
            for dependent in edges[node]:
                waiting[dependent] -= 1
                if waiting[dependent] == 0:
                    heapq.heappush(ready, dependent)

        if len(order) != len(self.nodes):
            remaining = sorted(self.nodes - set(order))
            logging.error(f"Cycle detected among experiments {remaining}; appending them in name order")
            order.extend(remaining)
        return order
