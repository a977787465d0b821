#include "neurodenoise/profiler.hpp"

#include <algorithm>
#include <cmath>
#include <cstring>
#include <sstream>
#include <stdexcept>

#include "json.hpp"

namespace neurodenoise {

double Histogram::mass_in(double lo, double hi) const {
    double m = 0.0;
    for (std::size_t i = 0; i + 1 < edges.size(); ++i) {
        double center = 0.5 * (edges[i] + edges[i + 1]);
        if (center >= lo && center <= hi) m += masses[i];
    }
    return m;
}

double Histogram::mean() const {
    double m = 0.0;
    for (std::size_t i = 0; i + 1 < edges.size(); ++i)
        m += masses[i] * 0.5 * (edges[i] + edges[i + 1]);
    return m;
}

double Histogram::variance() const {
    double mu = mean();
    double v = 0.0;
    for (std::size_t i = 0; i + 1 < edges.size(); ++i) {
        double c = 0.5 * (edges[i] + edges[i + 1]);
        v += masses[i] * (c - mu) * (c - mu);
    }
    return v;
}

namespace {

Histogram make_histogram(const std::vector<double>& values, double lo, double hi, int bins) {
    Histogram h;
    h.edges.resize(static_cast<std::size_t>(bins) + 1);
    for (int i = 0; i <= bins; ++i)
        h.edges[static_cast<std::size_t>(i)] = lo + (hi - lo) * i / static_cast<double>(bins);
    h.masses.assign(static_cast<std::size_t>(bins), 0.0);
    if (values.empty()) return h;
    for (double v : values) {
        int idx = static_cast<int>((v - lo) / (hi - lo) * bins);
        idx = std::clamp(idx, 0, bins - 1);
        h.masses[static_cast<std::size_t>(idx)] += 1.0;
    }
    for (double& m : h.masses) m /= static_cast<double>(values.size());
    return h;
}

}  // namespace

double count_synops(const std::vector<LayerActivity>& activity,
                    const std::vector<LayerTopology>& topology) {
    if (activity.size() != topology.size())
        throw std::invalid_argument("count_synops: activity/topology size mismatch");
    double total = 0.0;
    for (std::size_t l = 0; l < topology.size(); ++l) {
        const auto& topo = topology[l];
        if (!topo.spiking) continue;
        if (activity[l].spike_counts.size() != static_cast<std::size_t>(topo.neurons))
            throw std::invalid_argument("count_synops: neuron count mismatch in layer " + topo.name);
        double fan = topo.fan_next + (topo.recurrent ? topo.neurons : 0);
        total += activity[l].total_spikes() * fan;
    }
    return total;
}

double count_neuronops(const std::vector<LayerTopology>& topology, long steps) {
    double per_step = 0.0;
    for (const auto& t : topology) per_step += t.neurons;
    return per_step * static_cast<double>(steps);
}

double power_proxy(double synops, double neuronops, double audio_seconds, const CostModel& model) {
    if (audio_seconds <= 0.0) throw std::invalid_argument("power_proxy: audio duration must be > 0");
    return (synops + model.neuron_equiv_synops * neuronops) / audio_seconds;
}

double pdp_proxy(double power_proxy_ops_per_s, double latency_s) {
    if (latency_s < 0.0) throw std::invalid_argument("pdp_proxy: latency must be >= 0");
    return power_proxy_ops_per_s * latency_s;
}

double energy_cost(double pdp_ops, OpClass op_class, const CostModel& model) {
    double pj = op_class == OpClass::AC ? model.cost_ac_pj : model.cost_mac_pj;
    return pdp_ops * pj * 1e-12;
}

FiringStats firing_stats(const std::vector<LayerActivity>& activity,
                         const std::vector<LayerTopology>& topology, int bins) {
    if (activity.size() != topology.size())
        throw std::invalid_argument("firing_stats: activity/topology size mismatch");
    std::vector<double> rates;
    for (std::size_t l = 0; l < topology.size(); ++l) {
        if (!topology[l].spiking) continue;
        long steps = activity[l].steps;
        for (double c : activity[l].spike_counts)
            rates.push_back(steps > 0 ? c / static_cast<double>(steps) : 0.0);
    }
    FiringStats stats;
    stats.per_neuron = make_histogram(rates, 0.0, 1.0, bins);
    if (!rates.empty()) {
        double sum = 0.0;
        long silent = 0;
        long low = 0;
        for (double r : rates) {
            sum += r;
            if (r == 0.0) ++silent;
            if (r < 0.2) ++low;
        }
        stats.mean_rate = sum / static_cast<double>(rates.size());
        stats.silent_fraction = static_cast<double>(silent) / static_cast<double>(rates.size());
        stats.low_rate_fraction = static_cast<double>(low) / static_cast<double>(rates.size());
    }
    return stats;
}

DecayStats::DecayStats(int bins) : counts_(static_cast<std::size_t>(bins), 0.0) {}

void DecayStats::record(double lambda) {
    int bins = static_cast<int>(counts_.size());
    int idx = std::clamp(static_cast<int>(lambda * bins), 0, bins - 1);
    counts_[static_cast<std::size_t>(idx)] += 1.0;
    total_ += 1.0;
    sum_ += lambda;
    sum_sq_ += lambda * lambda;
}

Histogram DecayStats::histogram() const {
    Histogram h;
    int bins = static_cast<int>(counts_.size());
    h.edges.resize(static_cast<std::size_t>(bins) + 1);
    for (int i = 0; i <= bins; ++i) h.edges[static_cast<std::size_t>(i)] = i / static_cast<double>(bins);
    h.masses.assign(static_cast<std::size_t>(bins), 0.0);
    if (total_ > 0.0)
        for (int i = 0; i < bins; ++i)
            h.masses[static_cast<std::size_t>(i)] = counts_[static_cast<std::size_t>(i)] / total_;
    return h;
}

double DecayStats::mean() const { return total_ > 0.0 ? sum_ / total_ : 0.0; }

double DecayStats::variance() const {
    if (total_ <= 0.0) return 0.0;
    double mu = mean();
    return std::max(0.0, sum_sq_ / total_ - mu * mu);
}

namespace {

nlohmann::json histogram_to_json(const Histogram& h) {
    return nlohmann::json{{"edges", h.edges}, {"masses", h.masses}};
}

}  // namespace

std::string report_to_json(const PowerReport& r) {
    nlohmann::json j{
        {"synops", r.synops},
        {"neuronops", r.neuronops},
        {"readout_macs", r.readout_macs},
        {"power_proxy_ops_per_s", r.power_proxy_ops_per_s},
        {"pdp_proxy_ops", r.pdp_proxy_ops},
        {"energy_j", r.energy_j},
        {"latency_s", r.latency_s},
        {"audio_seconds", r.audio_seconds},
        {"steps", r.steps},
        {"silent_fraction", r.silent_fraction},
        {"low_rate_fraction", r.low_rate_fraction},
        {"firing_histogram", histogram_to_json(r.firing_histogram)},
        {"sample_rate_histogram", histogram_to_json(r.sample_rate_histogram)},
        {"decay_histogram", histogram_to_json(r.decay_histogram)},
    };
    return j.dump();
}

std::string report_to_table(const PowerReport& r) {
    std::ostringstream os;
    os << "metric                     value\n";
    os << "-------------------------  ------------------\n";
    auto row = [&os](const char* name, double v) {
        os << name;
        for (std::size_t i = std::strlen(name); i < 27; ++i) os << ' ';
        os << v << "\n";
    };
    row("synops", r.synops);
    row("neuronops", r.neuronops);
    row("readout_macs", r.readout_macs);
    row("power_proxy (Ops/s)", r.power_proxy_ops_per_s);
    row("pdp_proxy (Ops)", r.pdp_proxy_ops);
    row("energy (J)", r.energy_j);
    row("latency (s)", r.latency_s);
    row("audio (s)", r.audio_seconds);
    row("silent_fraction", r.silent_fraction);
    row("low_rate_fraction", r.low_rate_fraction);
    return os.str();
}

}  // namespace neurodenoise
