#include "fovea/attention.hpp"

#include <cmath>
#include <unordered_map>

#include <fmt/format.h>

#include "fovea/errors.hpp"

namespace fovea {

void AttentionMatrix::validate(double row_tolerance) const {
    if (n == 0) throw MalformedAttention(fmt::format("layer '{}': n must be positive", label));
    if (weights.size() != n * n) {
        throw MalformedAttention(
            fmt::format("layer '{}': weights has {} values, expected {}", label, weights.size(), n * n));
    }
    if (positions.size() != n) {
        throw MalformedAttention(
            fmt::format("layer '{}': positions has {} entries, expected {}", label, positions.size(), n));
    }
    for (std::size_t i = 0; i < n; ++i) {
        double sum = 0.0;
        for (std::size_t j = 0; j < n; ++j) {
            const double w = weights[i * n + j];
            if (!std::isfinite(w) || w < 0.0) {
                throw MalformedAttention(fmt::format("layer '{}': row {} column {} has invalid weight {}", label, i,
                                                     j, w));
            }
            sum += w;
        }
        if (std::abs(sum - 1.0) > row_tolerance) {
            throw MalformedAttention(fmt::format("layer '{}': row {} sums to {:.12g}", label, i, sum));
        }
    }
    for (std::size_t i = 0; i < n; ++i) {
        if (!std::isfinite(positions[i][0]) || !std::isfinite(positions[i][1])) {
            throw MalformedAttention(fmt::format("layer '{}': position {} is not finite", label, i));
        }
    }
}

double euclidean(const Position& a, const Position& b) {
    const double dy = a[0] - b[0];
    const double dx = a[1] - b[1];
    return std::sqrt(dy * dy + dx * dx);
}

double token_attention_distance(const AttentionMatrix& a, std::size_t i) {
    if (i >= a.n) throw InvalidArgument(fmt::format("token {} out of range for n = {}", i, a.n));
    double d = 0.0;
    for (std::size_t j = 0; j < a.n; ++j) d += a.at(i, j) * euclidean(a.positions[i], a.positions[j]);
    return d;
}

namespace {

bool integral_grid(const std::vector<Position>& positions) {
    for (const auto& p : positions) {
        if (p[0] != std::floor(p[0]) || p[1] != std::floor(p[1]) || std::abs(p[0]) > 4096 || std::abs(p[1]) > 4096)
            return false;
    }
    return true;
}

// Sum over rows of dot(A_i, D_i), four independent accumulators per row.
template <typename Dist>
double weighted_distance_sum(const AttentionMatrix& a, Dist&& dist) {
    double total = 0.0;
    for (std::size_t i = 0; i < a.n; ++i) {
        const double* w = a.weights.data() + i * a.n;
        double acc[4] = {0.0, 0.0, 0.0, 0.0};
        std::size_t j = 0;
        for (; j + 4 <= a.n; j += 4) {
            acc[0] += w[j] * dist(i, j);
            acc[1] += w[j + 1] * dist(i, j + 1);
            acc[2] += w[j + 2] * dist(i, j + 2);
            acc[3] += w[j + 3] * dist(i, j + 3);
        }
        for (; j < a.n; ++j) acc[0] += w[j] * dist(i, j);
        total += (acc[0] + acc[1]) + (acc[2] + acc[3]);
    }
    return total;
}

}  // namespace

double mean_attention_distance(const AttentionMatrix& a) {
    a.validate();
    double total = 0.0;
    if (integral_grid(a.positions)) {
        // On integer grids distances depend only on |dy|, |dx|; tabulate them once.
        long max_y = 0;
        long max_x = 0;
        for (const auto& p : a.positions) {
            max_y = std::max(max_y, static_cast<long>(std::abs(p[0])));
            max_x = std::max(max_x, static_cast<long>(std::abs(p[1])));
        }
        const std::size_t ny = static_cast<std::size_t>(2 * max_y + 1);
        const std::size_t nx = static_cast<std::size_t>(2 * max_x + 1);
        std::vector<double> table(ny * nx);
        for (std::size_t dy = 0; dy < ny; ++dy) {
            for (std::size_t dx = 0; dx < nx; ++dx) {
                table[dy * nx + dx] = std::sqrt(static_cast<double>(dy * dy + dx * dx));
            }
        }
        std::vector<long> ys(a.n);
        std::vector<long> xs(a.n);
        for (std::size_t i = 0; i < a.n; ++i) {
            ys[i] = static_cast<long>(a.positions[i][0]);
            xs[i] = static_cast<long>(a.positions[i][1]);
        }
        total = weighted_distance_sum(a, [&](std::size_t i, std::size_t j) {
            const auto dy = static_cast<std::size_t>(std::labs(ys[i] - ys[j]));
            const auto dx = static_cast<std::size_t>(std::labs(xs[i] - xs[j]));
            return table[dy * nx + dx];
        });
    } else {
        total = weighted_distance_sum(
            a, [&](std::size_t i, std::size_t j) { return euclidean(a.positions[i], a.positions[j]); });
    }
    return total / static_cast<double>(a.n);
}

double mean_attention_distance(std::span<const AttentionMatrix> heads) {
    if (heads.empty()) throw MalformedAttention("layer has no attention heads");
    double sum = 0.0;
    for (const auto& h : heads) sum += mean_attention_distance(h);
    return sum / static_cast<double>(heads.size());
}

double mean_attention_distance_naive(const AttentionMatrix& a) {
    double total = 0.0;
    for (std::size_t i = 0; i < a.n; ++i) {
        for (std::size_t j = 0; j < a.n; ++j) {
            const double dy = a.positions[i][0] - a.positions[j][0];
            const double dx = a.positions[i][1] - a.positions[j][1];
            total += a.weights[i * a.n + j] * std::sqrt(dy * dy + dx * dx);
        }
    }
    return total / static_cast<double>(a.n);
}

double DistanceProfile::mean() const {
    if (per_layer.empty()) throw EmptyProfile("profile has no layers");
    double s = 0.0;
    for (const auto& l : per_layer) s += l.mean_distance;
    return s / static_cast<double>(per_layer.size());
}

DistanceProfile layer_profile(std::span<const AttentionLayer> dump) {
    if (dump.empty()) throw EmptyProfile("attention dump has no layers");
    DistanceProfile profile;
    for (const auto& layer : dump) {
        profile.per_layer.push_back({layer.label, mean_attention_distance(std::span<const AttentionMatrix>(layer.heads))});
    }
    return profile;
}

DistanceProfile layer_profile(std::span<const AttentionMatrix> dump) {
    if (dump.empty()) throw EmptyProfile("attention dump has no layers");
    DistanceProfile profile;
    for (const auto& m : dump) profile.per_layer.push_back({m.label, mean_attention_distance(m)});
    return profile;
}

std::vector<double> token_distances(const AttentionMatrix& a) {
    a.validate();
    std::vector<double> out(a.n);
    for (std::size_t i = 0; i < a.n; ++i) out[i] = token_attention_distance(a, i);
    return out;
}

namespace {

void require_matching_labels(const DistanceProfile& a, const DistanceProfile& b) {
    if (a.per_layer.size() != b.per_layer.size()) {
        throw ProfileMismatch(
            fmt::format("profiles have {} and {} layers", a.per_layer.size(), b.per_layer.size()));
    }
    for (std::size_t i = 0; i < a.per_layer.size(); ++i) {
        if (a.per_layer[i].label != b.per_layer[i].label) {
            throw ProfileMismatch(fmt::format("layer {} is labelled '{}' before and '{}' after", i,
                                              a.per_layer[i].label, b.per_layer[i].label));
        }
    }
}

}  // namespace

DistanceProfile average_profiles(std::span<const DistanceProfile> profiles) {
    if (profiles.empty()) throw EmptyProfile("no profiles to average");
    DistanceProfile out;
    out.per_layer = profiles.front().per_layer;
    for (auto& l : out.per_layer) l.mean_distance = 0.0;
    for (const auto& p : profiles) {
        require_matching_labels(out, p);
        for (std::size_t i = 0; i < p.per_layer.size(); ++i) out.per_layer[i].mean_distance += p.per_layer[i].mean_distance;
    }
    for (auto& l : out.per_layer) l.mean_distance /= static_cast<double>(profiles.size());
    return out;
}

DistanceDelta distance_delta(const DistanceProfile& before, const DistanceProfile& after) {
    require_matching_labels(before, after);
    if (before.per_layer.empty()) throw EmptyProfile("profiles have no layers");
    DistanceDelta out;
    double sum = 0.0;
    for (std::size_t i = 0; i < before.per_layer.size(); ++i) {
        const double b = before.per_layer[i].mean_distance;
        const double a = after.per_layer[i].mean_distance;
        out.rows.push_back({before.per_layer[i].label, b, a, a - b});
        sum += a - b;
    }
    out.mean_delta = sum / static_cast<double>(out.rows.size());
    return out;
}

std::string profile_csv(const DistanceProfile& profile) {
    std::string out = "layer,mean_distance\n";
    for (const auto& l : profile.per_layer) out += fmt::format("{},{:.17g}\n", l.label, l.mean_distance);
    return out;
}

std::string delta_csv(const DistanceDelta& delta) {
    std::string out = "layer,before,after,delta\n";
    for (const auto& r : delta.rows) out += fmt::format("{},{:.17g},{:.17g},{:.17g}\n", r.label, r.before, r.after, r.delta);
    return out;
}

}  // namespace fovea
