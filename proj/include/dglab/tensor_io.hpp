#pragma once

// JSON documents for tensors and structure reports.
//
// Tensor documents:
//   {"kind": "example4", "bump_radius": 0.25, "b_peak": 2, "w_peak": -10}
//   {"kind": "identity", "n": 3, "N": 2}
//   {"kind": "diagonal", "n": 3, "blocks": [[...n*n...], ...]}      (one block per component)
//   {"kind": "constant_blocks", "n": 3, "N": 2, "entries": [...N*N*n*n...]}
//   {"kind": "constant_blocks", "n": 3, "N": 2, "blocks": {"1,2": [[...], ...], ...}}  (1-based, missing = 0)
// Named presets accepted where a name is expected: example4, identity,
// diagonal, constant_offdiag, zero.

#include <filesystem>
#include <fstream>
#include <limits>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "dglab/coefficients.hpp"
#include "dglab/errors.hpp"

namespace dglab {

inline CoefficientTensor tensor_from_json(const nlohmann::json& j) {
    try {
        const std::string kind = j.at("kind").get<std::string>();
        if (kind == "example4") {
            ExampleTensorSpec s;
            s.bump_radius = j.value("bump_radius", s.bump_radius);
            s.b_peak = j.value("b_peak", s.b_peak);
            s.w_peak = j.value("w_peak", s.w_peak);
            return build_example_tensor(s);
        }
        if (kind == "identity") return identity_tensor(j.value("n", 3), j.value("N", 2));
        if (kind == "zero") return zero_tensor(j.value("n", 3), j.value("N", 2));
        if (kind == "diagonal") {
            const int n = j.value("n", 3);
            if (!j.contains("blocks")) return diagonal_tensor(n, {{2, 0, 0, 0, 2, 0, 0, 0, 1}, {27, 0, 0, 0, 1, 0, 0, 0, 1}});
            std::vector<std::vector<double>> blocks;
            for (const auto& b : j.at("blocks")) {
                std::vector<double> flat;
                for (const auto& row : b) {
                    if (row.is_array())
                        for (const auto& v : row) flat.push_back(v.get<double>());
                    else
                        flat.push_back(row.get<double>());
                }
                blocks.push_back(std::move(flat));
            }
            return diagonal_tensor(n, blocks);
        }
        if (kind == "constant_blocks") {
            const int n = j.at("n").get<int>();
            const int N = j.at("N").get<int>();
            std::vector<double> e(static_cast<std::size_t>(N) * N * n * n, 0.0);
            if (j.contains("entries")) {
                e = j.at("entries").get<std::vector<double>>();
            } else {
                for (const auto& [key, block] : j.at("blocks").items()) {
                    const auto comma = key.find(',');
                    if (comma == std::string::npos) throw FormatError("block key must be 'alpha,beta'");
                    const int a = std::stoi(key.substr(0, comma)) - 1;
                    const int b = std::stoi(key.substr(comma + 1)) - 1;
                    if (a < 0 || a >= N || b < 0 || b >= N) throw FormatError("block index out of range: " + key);
                    const auto rows = block.get<std::vector<std::vector<double>>>();
                    if (rows.size() != static_cast<std::size_t>(n)) throw FormatError("block must be n x n");
                    for (int i = 0; i < n; ++i) {
                        if (rows[i].size() != static_cast<std::size_t>(n)) throw FormatError("block must be n x n");
                        for (int k = 0; k < n; ++k)
                            e[((static_cast<std::size_t>(a) * N + b) * n + i) * n + k] = rows[i][k];
                    }
                }
            }
            return constant_tensor(n, N, std::move(e));
        }
        throw FormatError("unknown tensor kind '" + kind + "'");
    } catch (const nlohmann::json::exception& e) {
        throw FormatError(std::string("tensor document: ") + e.what());
    }
}

/// Identity (n = 3, N = 2) plus a^{1,2}_{1,1} = 1 everywhere.
inline CoefficientTensor constant_offdiag_tensor(int n = 3, int N = 2) {
    std::vector<double> e(static_cast<std::size_t>(N) * N * n * n, 0.0);
    for (int a = 0; a < N; ++a)
        for (int i = 0; i < n; ++i) e[((static_cast<std::size_t>(a) * N + a) * n + i) * n + i] = 1.0;
    e[((0 * static_cast<std::size_t>(N) + 1) * n + 0) * n + 0] = 1.0;
    return constant_tensor(n, N, std::move(e), "constant_offdiag");
}

inline CoefficientTensor tensor_from_name(const std::string& name) {
    if (name == "constant_offdiag") return constant_offdiag_tensor();
    if (name == "example4" || name == "identity" || name == "diagonal" || name == "zero")
        return tensor_from_json({{"kind", name}});
    throw InvalidArgument("unknown tensor preset '" + name + "'");
}

/// A preset name, or a path to a tensor JSON document.
inline CoefficientTensor load_tensor(const std::string& name_or_path) {
    if (std::filesystem::exists(name_or_path)) {
        std::ifstream is(name_or_path);
        nlohmann::json j;
        try {
            is >> j;
        } catch (const nlohmann::json::exception& e) {
            throw FormatError(std::string("tensor file: ") + e.what());
        }
        return tensor_from_json(j);
    }
    return tensor_from_name(name_or_path);
}

inline nlohmann::json optional_number(const std::optional<double>& v) {
    return v ? nlohmann::json(*v) : nlohmann::json(nullptr);
}

inline nlohmann::json to_json(const StaircaseWitness& w) {
    return {{"x", w.x}, {"y", w.y}, {"alpha", w.alpha + 1}, {"beta", w.beta + 1}, {"L", w.L},
            {"implication", w.upper ? "upper" : "lower"}};
}

inline nlohmann::json to_json(const StructureReport& r) {
    nlohmann::json w = nlohmann::json::array();
    for (const auto& x : r.witnesses) w.push_back(to_json(x));
    return {{"c", r.c},
            {"nu", r.nu},
            {"L0", optional_number(r.L0)},
            {"passed_A1", r.passed_A1},
            {"passed_A2", r.passed_A2},
            {"passed_A3", r.passed_A3},
            {"sample_spec", r.sample_spec},
            {"sample_count", r.sample_count},
            {"nu_argmin_y", r.nu_argmin_y},
            {"untestable_L", r.untestable_L},
            {"witnesses", w}};
}

}  // namespace dglab
