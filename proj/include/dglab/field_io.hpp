#pragma once

// Field files: CSV with header x1..xn,u1..uN, one vertex per row at 17
// significant digits, plus a JSON sidecar recording how to rebuild the mesh.

#include <filesystem>
#include <fstream>
#include <iomanip>
#include <sstream>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "dglab/errors.hpp"
#include "dglab/mesh.hpp"

namespace dglab {

inline nlohmann::json mesh_sidecar(const Mesh& m, int N) {
    return {{"n", m.n()},
            {"box", {{"lower", m.lower()}, {"upper", m.upper()}}},
            {"cells_per_axis", m.cells_per_axis()},
            {"N", N}};
}

inline std::filesystem::path sidecar_path(const std::filesystem::path& csv) {
    auto p = csv;
    p.replace_extension(".mesh.json");
    return p;
}

inline void write_field_csv(const DiscreteField& u, std::ostream& os) {
    const Mesh& m = u.mesh();
    for (int d = 0; d < m.n(); ++d) os << (d ? "," : "") << "x" << d + 1;
    for (int a = 0; a < u.N(); ++a) os << ",u" << a + 1;
    os << "\n" << std::setprecision(17);
    for (std::size_t v = 0; v < m.vertex_count(); ++v) {
        const auto x = m.vertex(v);
        for (int d = 0; d < m.n(); ++d) os << (d ? "," : "") << x[d];
        for (int a = 0; a < u.N(); ++a) os << "," << u.at(v, a);
        os << "\n";
    }
}

/// Writes <path> and its mesh sidecar.
inline void save_field(const DiscreteField& u, const std::filesystem::path& path) {
    std::ofstream os(path);
    if (!os) throw FormatError("cannot open " + path.string() + " for writing");
    write_field_csv(u, os);
    std::ofstream js(sidecar_path(path));
    if (!js) throw FormatError("cannot open sidecar for " + path.string());
    js << mesh_sidecar(u.mesh(), u.N()).dump(2) << "\n";
}

inline MeshPtr mesh_from_sidecar(const nlohmann::json& j) {
    try {
        return build_box_mesh(j.at("n").get<int>(), j.at("box").at("lower").get<std::vector<double>>(),
                              j.at("box").at("upper").get<std::vector<double>>(),
                              j.at("cells_per_axis").get<int>());
    } catch (const nlohmann::json::exception& e) {
        throw FormatError(std::string("mesh sidecar: ") + e.what());
    }
}

/// Reads a field CSV against an existing mesh; vertex coordinates must match.
inline DiscreteField read_field_csv(MeshPtr mesh, std::istream& is) {
    std::string line;
    if (!std::getline(is, line)) throw FormatError("field csv: missing header");
    const int n = mesh->n();
    int columns = 1;
    for (char c : line) columns += c == ',';
    const int N = columns - n;
    if (N < 1) throw FormatError("field csv: header has no u columns");
    std::vector<double> values;
    values.reserve(mesh->vertex_count() * N);
    std::size_t v = 0;
    while (std::getline(is, line)) {
        if (line.empty()) continue;
        if (v >= mesh->vertex_count()) throw FormatError("field csv: more rows than mesh vertices");
        std::stringstream ss(line);
        std::string cell;
        int col = 0;
        const auto x = mesh->vertex(v);
        while (std::getline(ss, cell, ',')) {
            double val = 0.0;
            try {
                val = std::stod(cell);
            } catch (const std::exception&) {
                throw FormatError("field csv: bad number '" + cell + "'");
            }
            if (col < n) {
                const double tol = 1e-12 * (1.0 + std::abs(x[col]));
                if (std::abs(val - x[col]) > tol) throw FormatError("field csv: vertex coordinates do not match mesh");
            } else if (col < columns) {
                values.push_back(val);
            }
            ++col;
        }
        if (col != columns) throw FormatError("field csv: wrong column count");
        ++v;
    }
    if (v != mesh->vertex_count()) throw FormatError("field csv: fewer rows than mesh vertices");
    return DiscreteField(std::move(mesh), N, std::move(values));
}

/// Reads <path> using the mesh described by its sidecar.
inline DiscreteField load_field(const std::filesystem::path& path) {
    std::ifstream js(sidecar_path(path));
    if (!js) throw FormatError("missing mesh sidecar for " + path.string());
    nlohmann::json j;
    try {
        js >> j;
    } catch (const nlohmann::json::exception& e) {
        throw FormatError(std::string("mesh sidecar: ") + e.what());
    }
    std::ifstream is(path);
    if (!is) throw FormatError("cannot open " + path.string());
    return read_field_csv(mesh_from_sidecar(j), is);
}

}  // namespace dglab
