from tapersim.core.dependency_graph import DependencyGraph


def test_dependency_graph_simple():
    graph = DependencyGraph()
    graph.add_node('sweep-power', ['calibrate'])  # sweep needs the fitted model first

    order = graph.get_execution_order()
    assert order == ['calibrate', 'sweep-power']


def test_dependency_graph_shared_prerequisite():
    graph = DependencyGraph()
    graph.add_node('calibrate', [])
    for name in ('sweep-wavelength', 'sweep-power', 'adiabatic-scan', 'sweep-reps'):
        graph.add_node(name, ['calibrate'])

    order = graph.get_execution_order()

    assert order[0] == 'calibrate'
    # independent nodes come out in name order
    assert order[1:] == ['adiabatic-scan', 'sweep-power', 'sweep-reps', 'sweep-wavelength']


def test_dependency_graph_cycle():
    graph = DependencyGraph()
    graph.add_node('a', ['b'])
    graph.add_node('b', ['a'])

    order = graph.get_execution_order()
    # Should return all nodes even with cycle (fallback)
    assert set(order) == {'a', 'b'}
    assert len(order) == 2


def test_prerequisite_only_nodes_are_scheduled():
    graph = DependencyGraph()
    graph.add_node('sweep-reps', ['calibrate'])
    assert graph.dependents() == {'calibrate': ['sweep-reps'], 'sweep-reps': []}
    assert graph.get_execution_order() == ['calibrate', 'sweep-reps']
