#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <random>

#include "doctest.h"
#include "neurodenoise/profiler.hpp"

using namespace neurodenoise;

TEST_CASE("count_synops hand sum") {
    // layer of 2 neurons with totals {1, 2} and fan 3 + 2 (recurrent) = 5 -> 15
    std::vector<LayerTopology> topo{{2, 3, true, true, "l"}};
    std::vector<LayerActivity> act(1);
    act[0].spike_counts = {1.0, 2.0};
    act[0].steps = 4;
    CHECK(count_synops(act, topo) == 15.0);

    // no spikes -> 0
    act[0].spike_counts = {0.0, 0.0};
    CHECK(count_synops(act, topo) == 0.0);

    // non-spiking layers do not contribute
    topo.push_back({5, 0, false, false, "readout"});
    act.push_back({});
    act[1].spike_counts.assign(5, 7.0);
    CHECK(count_synops(act, topo) == 0.0);
}

TEST_CASE("count_synops equals a per-spike brute-force counter") {
    std::mt19937_64 rng(42);
    for (int trial = 0; trial < 30; ++trial) {
        int layers = 1 + static_cast<int>(rng() % 4);
        std::vector<LayerTopology> topo;
        std::vector<LayerActivity> act;
        long steps = 3 + static_cast<long>(rng() % 10);
        std::vector<std::vector<std::vector<int>>> events;  // [layer][step][neuron]
        for (int l = 0; l < layers; ++l) {
            LayerTopology t;
            t.neurons = 1 + static_cast<int>(rng() % 6);
            t.fan_next = static_cast<int>(rng() % 8);
            t.recurrent = (rng() & 1) != 0;
            t.spiking = true;
            topo.push_back(t);
            LayerActivity a;
            a.spike_counts.assign(static_cast<std::size_t>(t.neurons), 0.0);
            a.steps = steps;
            std::vector<std::vector<int>> per_step;
            for (long s = 0; s < steps; ++s) {
                std::vector<int> spikes(static_cast<std::size_t>(t.neurons));
                for (auto& v : spikes) v = static_cast<int>(rng() & 1);
                for (int i = 0; i < t.neurons; ++i)
                    a.spike_counts[static_cast<std::size_t>(i)] += spikes[static_cast<std::size_t>(i)];
                per_step.push_back(spikes);
            }
            act.push_back(a);
            events.push_back(per_step);
        }

        // brute force: one op per spike per outgoing synapse
        double brute = 0.0;
        for (int l = 0; l < layers; ++l) {
            int fan = topo[static_cast<std::size_t>(l)].fan_next +
                      (topo[static_cast<std::size_t>(l)].recurrent
                           ? topo[static_cast<std::size_t>(l)].neurons
                           : 0);
            for (const auto& step : events[static_cast<std::size_t>(l)])
                for (int v : step) brute += static_cast<double>(v) * fan;
        }
        CHECK(count_synops(act, topo) == brute);
        CHECK(count_neuronops(topo, steps) ==
              [&] {
                  double b = 0.0;
                  for (long s = 0; s < steps; ++s)
                      for (const auto& t : topo) b += t.neurons;
                  return b;
              }());
    }
}

TEST_CASE("count_neuronops hand sums") {
    std::vector<LayerTopology> topo{{4, 0, true, true, "a"}, {4, 0, true, true, "b"}, {2, 0, false, false, "c"}};
    CHECK(count_neuronops(topo, 1) == 10.0);
    CHECK(count_neuronops(topo, 10) == 100.0);
}

TEST_CASE("power proxy arithmetic") {
    CHECK(power_proxy(7.5, 5.0, 1.0) == doctest::Approx(57.5));
    // doubling duration with identical per-second activity leaves it unchanged
    CHECK(power_proxy(15.0, 10.0, 2.0) == doctest::Approx(57.5));
    CHECK_THROWS_AS(power_proxy(1.0, 1.0, 0.0), std::invalid_argument);
}

TEST_CASE("pdp proxy and energy cost reproduce the reference operating points") {
    double pdp = pdp_proxy(51.30e6, 0.03202);
    CHECK(pdp == doctest::Approx(1.64e6).epsilon(0.01));
    CHECK(pdp_proxy(51.30e6, 0.0) == 0.0);
    CHECK(pdp_proxy(2.0 * 51.30e6, 0.03202) == doctest::Approx(2.0 * pdp));  // linear

    CHECK(energy_cost(1.64e6, OpClass::AC) == doctest::Approx(1.48e-6).epsilon(0.01));
    CHECK(energy_cost(2.72e6, OpClass::MAC) == doctest::Approx(12.51e-6).epsilon(0.01));
    CHECK(energy_cost(1.96e6, OpClass::AC) == doctest::Approx(1.76e-6).epsilon(0.01));
    CHECK(energy_cost(0.0, OpClass::AC) == 0.0);
}

TEST_CASE("firing stats fractions and histogram") {
    std::vector<LayerTopology> topo{{2, 1, true, true, "l"}};
    std::vector<LayerActivity> act(1);
    act[0].steps = 10;

    // all silent
    act[0].spike_counts = {0.0, 0.0};
    FiringStats s = firing_stats(act, topo);
    CHECK(s.silent_fraction == 1.0);
    CHECK(s.low_rate_fraction == 1.0);

    // one always firing of two
    act[0].spike_counts = {0.0, 10.0};
    s = firing_stats(act, topo);
    CHECK(s.silent_fraction == 0.5);
    CHECK(s.mean_rate == doctest::Approx(0.5));
    CHECK(s.per_neuron.masses.front() == doctest::Approx(0.5));
    CHECK(s.per_neuron.masses.back() == doctest::Approx(0.5));

    // fractions match a brute-force recount on random data
    std::mt19937_64 rng(7);
    act[0].spike_counts = {static_cast<double>(rng() % 11), static_cast<double>(rng() % 11)};
    s = firing_stats(act, topo);
    int silent = 0, low = 0;
    for (double c : act[0].spike_counts) {
        if (c == 0.0) ++silent;
        if (c / 10.0 < 0.2) ++low;
    }
    CHECK(s.silent_fraction == silent / 2.0);
    CHECK(s.low_rate_fraction == low / 2.0);
}

TEST_CASE("decay stats accumulate a normalized histogram with exact moments") {
    DecayStats stats;
    CHECK(stats.empty());
    std::mt19937_64 rng(11);
    std::uniform_real_distribution<double> dist(0.01, 0.99);
    std::vector<double> values;
    for (int i = 0; i < 1000; ++i) {
        double v = dist(rng);
        values.push_back(v);
        stats.record(v);
    }
    Histogram h = stats.histogram();
    double mass = 0.0;
    for (double m : h.masses) mass += m;
    CHECK(mass == doctest::Approx(1.0).epsilon(1e-12));

    double mean = 0.0;
    for (double v : values) mean += v;
    mean /= values.size();
    double var = 0.0;
    for (double v : values) var += (v - mean) * (v - mean);
    var /= values.size();
    CHECK(stats.mean() == doctest::Approx(mean).epsilon(1e-12));
    CHECK(stats.variance() == doctest::Approx(var).epsilon(1e-9));
}

TEST_CASE("zero-bias gate values concentrate all mass at 0.5") {
    DecayStats stats;
    for (int i = 0; i < 100; ++i) stats.record(0.5);
    Histogram h = stats.histogram();
    CHECK(h.mass_in(0.45, 0.55) == doctest::Approx(1.0));
    CHECK(stats.variance() == doctest::Approx(0.0));
}

TEST_CASE("histogram mass_in and moments") {
    Histogram h;
    h.edges = {0.0, 0.25, 0.5, 0.75, 1.0};
    h.masses = {0.25, 0.25, 0.25, 0.25};
    CHECK(h.mass_in(0.0, 1.0) == doctest::Approx(1.0));
    CHECK(h.mass_in(0.0, 0.5) == doctest::Approx(0.5));
    CHECK(h.mean() == doctest::Approx(0.5));
}

TEST_CASE("reports serialize to JSON and a table") {
    PowerReport r;
    r.synops = 10.0;
    r.neuronops = 3.0;
    std::string j = report_to_json(r);
    CHECK(j.find("\"synops\"") != std::string::npos);
    CHECK(j.find("\"neuronops\"") != std::string::npos);
    std::string t = report_to_table(r);
    CHECK(t.find("synops") != std::string::npos);
}

TEST_CASE("shape mismatches are rejected") {
    std::vector<LayerTopology> topo{{2, 1, true, true, "l"}};
    std::vector<LayerActivity> act(2);
    CHECK_THROWS_AS(count_synops(act, topo), std::invalid_argument);
    act.resize(1);
    act[0].spike_counts = {1.0};  // wrong neuron count
    CHECK_THROWS_AS(count_synops(act, topo), std::invalid_argument);
}
