#include "kcover/io.hpp"

#include <fstream>
#include <sstream>

#include <fmt/format.h>

#include "kcover/error.hpp"

namespace kcover::io {

namespace fs = std::filesystem;

void write_file_atomic(const fs::path& path, std::string_view content) {
    if (path.has_parent_path()) fs::create_directories(path.parent_path());
    fs::path tmp = path;
    tmp += ".tmp";
    {
        std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
        if (!out) throw std::runtime_error("cannot open " + tmp.string() + " for writing");
        out.write(content.data(), static_cast<std::streamsize>(content.size()));
        out.flush();
        if (!out) throw std::runtime_error("short write to " + tmp.string());
    }
    fs::rename(tmp, path);
}

std::string read_file(const fs::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw SchemaError("cannot read " + path.string());
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

std::string number(double v) { return fmt::format("{:.17g}", v); }

json point_json(Point2 p) { return json::array({p.x, p.y}); }

Point2 point_from_json(const json& j) {
    if (!j.is_array() || j.size() != 2 || !j[0].is_number() || !j[1].is_number()) {
        throw SchemaError("a point must be [x, y], got " + j.dump());
    }
    return {j[0].get<double>(), j[1].get<double>()};
}

json region_json(const Region& region) {
    if (std::holds_alternative<Torus>(region)) return "torus";
    json verts = json::array();
    for (const Point2& v : std::get<ConvexPolygon>(region).vertices()) verts.push_back(point_json(v));
    return {{"polygon", verts}};
}

namespace {

void only_keys(const json& j, std::initializer_list<std::string_view> allowed, std::string_view where) {
    if (!j.is_object()) throw SchemaError(std::string(where) + " must be an object");
    for (const auto& [key, _] : j.items()) {
        bool ok = false;
        for (auto a : allowed) ok = ok || key == a;
        if (!ok) throw SchemaError("unknown field '" + key + "' in " + std::string(where));
    }
}

double num(const json& j, std::string_view what) {
    if (!j.is_number()) throw SchemaError(std::string(what) + " must be a number");
    return j.get<double>();
}

}  // namespace

Region region_from_json(const json& j) {
    if (j.is_string()) {
        if (j.get<std::string>() == "torus") return Torus{};
        throw SchemaError("unknown region '" + j.get<std::string>() + "'");
    }
    only_keys(j, {"polygon", "rectangle", "regular"}, "region");
    if (j.size() != 1) throw SchemaError("region needs exactly one of polygon, rectangle, regular");
    if (j.contains("polygon")) {
        if (!j["polygon"].is_array()) throw SchemaError("region.polygon must be a list of points");
        std::vector<Point2> v;
        for (const auto& p : j["polygon"]) v.push_back(point_from_json(p));
        return ConvexPolygon::from_points(std::move(v));
    }
    if (j.contains("rectangle")) {
        const auto& r = j["rectangle"];
        if (!r.is_array() || r.size() != 4) throw SchemaError("region.rectangle must be [x0, y0, x1, y1]");
        return ConvexPolygon::rectangle(num(r[0], "x0"), num(r[1], "y0"), num(r[2], "x1"), num(r[3], "y1"));
    }
    const auto& g = j["regular"];
    only_keys(g, {"center", "radius", "sides", "phase"}, "region.regular");
    if (!g.contains("radius") || !g.contains("sides")) throw SchemaError("region.regular needs radius and sides");
    if (!g["sides"].is_number_integer() || g["sides"].get<int>() < 3) throw SchemaError("region.regular.sides must be >= 3");
    const Point2 c = g.contains("center") ? point_from_json(g["center"]) : Point2{0.0, 0.0};
    const double r = num(g["radius"], "region.regular.radius");
    if (!(r > 0.0)) throw SchemaError("region.regular.radius must be positive");
    return ConvexPolygon::regular(c, r, g["sides"].get<int>(), g.contains("phase") ? num(g["phase"], "phase") : 0.0);
}

json partition_snapshot(const OrderKPartition& partition, const AgentConfiguration& config) {
    json gens = json::array();
    for (const Point2& p : config.positions()) gens.push_back(point_json(p));
    json cells = json::array();
    for (const Cell& c : partition.cells()) {
        json pieces = json::array();
        for (const CellPiece& piece : c.pieces) {
            json poly = json::array();
            for (const Point2& v : piece.polygon.vertices()) poly.push_back(point_json(v));
            pieces.push_back(std::move(poly));
        }
        cells.push_back({{"key", json(std::vector<std::size_t>(c.key.indices().begin(), c.key.indices().end()))},
                         {"area", c.area()},
                         {"pieces", std::move(pieces)}});
    }
    return {{"version", kFormatVersion},
            {"region", region_json(config.region())},
            {"k", partition.order()},
            {"generators", std::move(gens)},
            {"cells", std::move(cells)}};
}

namespace {

std::string key_color(const json& key) {
    std::uint64_t h = 1469598103934665603ULL;
    for (const auto& i : key) h = (h ^ i.get<std::uint64_t>()) * 1099511628211ULL;
    return fmt::format("hsl({},55%,{}%)", h % 360, 72 + (h >> 20) % 14);
}

}  // namespace

std::string render_svg(const json& snapshot) {
    try {
        const Region region = region_from_json(snapshot.at("region"));
        const ConvexPolygon domain =
            std::holds_alternative<Torus>(region) ? Torus::fundamental_square() : std::get<ConvexPolygon>(region);
        const BoundingBox b = domain.bounds();
        const double size = 600.0;
        const double margin = 20.0;
        const double scale = size / std::max(b.width(), b.height());
        const double w = b.width() * scale + 2 * margin;
        const double h = b.height() * scale + 2 * margin;
        auto sx = [&](double x) { return margin + (x - b.lo.x) * scale; };
        auto sy = [&](double y) { return margin + (b.hi.y - y) * scale; };
        auto path = [&](const json& pts) {
            std::string d;
            for (const auto& p : pts) {
                const Point2 q = point_from_json(p);
                d += fmt::format("{}{:.3f},{:.3f}", d.empty() ? "M" : " L", sx(q.x), sy(q.y));
            }
            return d + " Z";
        };

        std::string out = fmt::format(
            "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"{:.0f}\" height=\"{:.0f}\" viewBox=\"0 0 {:.3f} {:.3f}\">\n",
            w, h, w, h);
        out += fmt::format("<rect width=\"{:.3f}\" height=\"{:.3f}\" fill=\"white\"/>\n", w, h);
        for (const auto& cell : snapshot.at("cells")) {
            const std::string color = key_color(cell.at("key"));
            for (const auto& piece : cell.at("pieces")) {
                out += fmt::format("<path d=\"{}\" fill=\"{}\" stroke=\"#555\" stroke-width=\"0.6\"/>\n", path(piece), color);
            }
        }
        json outline = json::array();
        for (const Point2& v : domain.vertices()) outline.push_back(point_json(v));
        out += fmt::format("<path d=\"{}\" fill=\"none\" stroke=\"black\" stroke-width=\"1.5\"/>\n", path(outline));
        std::size_t i = 0;
        for (const auto& g : snapshot.at("generators")) {
            const Point2 p = point_from_json(g);
            out += fmt::format("<circle cx=\"{:.3f}\" cy=\"{:.3f}\" r=\"3\" fill=\"black\"><title>{}</title></circle>\n",
                               sx(p.x), sy(p.y), i++);
        }
        out += "</svg>\n";
        return out;
    } catch (const json::exception& e) {
        throw SchemaError(std::string("malformed snapshot: ") + e.what());
    }
}

std::string trajectory_csv(const Trajectory& traj) {
    std::string out = "t,agent_id,x,y,H\n";
    for (std::size_t s = 0; s < traj.states.size(); ++s) {
        const auto& c = traj.states[s];
        for (std::size_t i = 0; i < c.size(); ++i) {
            out += fmt::format("{},{},{},{},{}\n", number(traj.times[s]), i, number(c[i].x), number(c[i].y),
                               number(traj.H_values[s]));
        }
    }
    return out;
}

std::string lloyd_csv(const LloydReport& rep) {
    std::string out = "cycle,agent_id,x,y,H\n";
    for (std::size_t s = 0; s < rep.iterates.size(); ++s) {
        const auto& c = rep.iterates[s];
        for (std::size_t i = 0; i < c.size(); ++i) {
            out += fmt::format("{},{},{},{},{}\n", s, i, number(c[i].x), number(c[i].y), number(rep.H_values[s]));
        }
    }
    return out;
}

std::string mmeans_csv(const MMeansReport& rep) {
    std::string out = "iteration,center_id,x,y,H\n";
    for (std::size_t s = 0; s < rep.iterates.size(); ++s) {
        for (std::size_t i = 0; i < rep.iterates[s].size(); ++i) {
            const Point2 c = rep.iterates[s][i];
            out += fmt::format("{},{},{},{},{}\n", s, i, number(c.x), number(c.y), number(rep.H_values[s]));
        }
    }
    return out;
}

std::string curve_csv(std::string_view label, const std::vector<double>& xs, const std::vector<double>& hs) {
    std::string out = fmt::format("{},H\n", label);
    for (std::size_t s = 0; s < xs.size(); ++s) out += fmt::format("{},{}\n", number(xs[s]), number(hs[s]));
    return out;
}

json stability_json(const StabilityReport& rep) {
    auto matrix = [](const Eigen::MatrixXd& m) {
        json rows = json::array();
        for (Eigen::Index r = 0; r < m.rows(); ++r) {
            json row = json::array();
            for (Eigen::Index c = 0; c < m.cols(); ++c) row.push_back(m(r, c));
            rows.push_back(std::move(row));
        }
        return rows;
    };
    json jeig = json::array();
    for (const auto& e : rep.jacobian_eigenvalues) jeig.push_back({e.real(), e.imag()});
    json out = {{"version", kFormatVersion},
                {"classification", stability_name(rep.classification)},
                {"residual", rep.residual},
                {"jacobian_eigenvalues", std::move(jeig)},
                {"hessian_eigenvalues", rep.hessian_eigenvalues},
                {"hessian_asymmetry", rep.hessian_asymmetry},
                {"jacobian", matrix(rep.jacobian)},
                {"hessian", matrix(rep.hessian)}};
    if (rep.hessian_identity) out["hessian_identity"] = matrix(*rep.hessian_identity);
    return out;
}

json mmeans_json(const MMeansReport& rep) {
    json iters = json::array();
    for (const auto& centers : rep.iterates) {
        json c = json::array();
        for (const Point2& p : centers) c.push_back(point_json(p));
        iters.push_back(std::move(c));
    }
    json owner = json::array();
    for (const CellKey& key : rep.assignment.owner) {
        owner.push_back(std::vector<std::size_t>(key.indices().begin(), key.indices().end()));
    }
    return {{"version", kFormatVersion},
            {"terminated", rep.terminated},
            {"cycles", rep.cycles},
            {"restarts", rep.restarts},
            {"H", rep.H_values},
            {"centers", std::move(iters)},
            {"owner", std::move(owner)}};
}

DiscreteScene read_scene_csv(const fs::path& path) {
    std::istringstream in(read_file(path));
    std::string line;
    if (!std::getline(in, line)) throw SchemaError(path.string() + " is empty");
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line != "x,y,weight") throw SchemaError(path.string() + ": header must be x,y,weight");
    DiscreteScene scene;
    std::size_t row = 1;
    while (std::getline(in, line)) {
        ++row;
        if (!line.empty() && line.back() == '\r') line.pop_back();
        if (line.empty()) continue;
        double v[3];
        std::size_t pos = 0;
        for (int c = 0; c < 3; ++c) {
            const std::size_t end = line.find(',', pos);
            if ((c < 2) == (end == std::string::npos)) {
                throw SchemaError(fmt::format("{}:{}: expected 3 columns", path.string(), row));
            }
            const std::string cell = line.substr(pos, end == std::string::npos ? std::string::npos : end - pos);
            try {
                std::size_t used = 0;
                v[c] = std::stod(cell, &used);
                if (used != cell.size()) throw std::invalid_argument(cell);
            } catch (const std::exception&) {
                throw SchemaError(fmt::format("{}:{}: '{}' is not a number", path.string(), row, cell));
            }
            pos = end + 1;
        }
        scene.points.push_back({v[0], v[1]});
        scene.weights.push_back(v[2]);
    }
    scene.validate();
    return scene;
}

}  // namespace kcover::io
