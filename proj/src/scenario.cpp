#include "kcover/scenario.hpp"

#include "kcover/error.hpp"
#include "kcover/io.hpp"
#include "kcover/rng.hpp"

namespace kcover {

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

void only_keys(const json& j, std::initializer_list<std::string_view> allowed, const std::string& where) {
    if (!j.is_object()) throw SchemaError(where + " must be an object");
    for (const auto& [key, _] : j.items()) {
        bool ok = false;
        for (auto a : allowed) ok = ok || key == a;
        if (!ok) throw SchemaError("unknown field '" + key + "' in " + where);
    }
}

double number_at(const json& j, const char* key, double fallback) {
    if (!j.contains(key)) return fallback;
    if (!j[key].is_number()) throw SchemaError(std::string(key) + " must be a number");
    return j[key].get<double>();
}

// Parsed text gives unsigned for non-negative integers, documents built in
// code give signed ones.
bool is_count(const json& j) {
    return j.is_number_unsigned() || (j.is_number_integer() && j.get<std::int64_t>() >= 0);
}

std::size_t count_at(const json& j, const char* key, std::size_t fallback) {
    if (!j.contains(key)) return fallback;
    if (!is_count(j[key])) throw SchemaError(std::string(key) + " must be a non-negative integer");
    return j[key].get<std::size_t>();
}

BoundingBox box_from(const json& j, const std::string& where) {
    if (!j.is_array() || j.size() != 4) throw SchemaError(where + " must be [x0, y0, x1, y1]");
    for (const auto& v : j) {
        if (!v.is_number()) throw SchemaError(where + " must hold numbers");
    }
    BoundingBox b{{j[0].get<double>(), j[1].get<double>()}, {j[2].get<double>(), j[3].get<double>()}};
    if (!(b.hi.x > b.lo.x && b.hi.y > b.lo.y)) throw SchemaError(where + " is empty");
    return b;
}

std::vector<Point2> points_from(const json& j, const std::string& where) {
    if (!j.is_array()) throw SchemaError(where + " must be a list of points");
    std::vector<Point2> out;
    for (const auto& p : j) out.push_back(io::point_from_json(p));
    return out;
}

CostModel cost_from(const json& j, std::size_t k) {
    only_keys(j, {"kind", "p", "a", "gain", "threshold", "noise", "false_alarm"}, "cost");
    if (!j.contains("kind") || !j["kind"].is_string()) throw SchemaError("cost.kind is required");
    const std::string kind = j["kind"];
    CostModel m = CostModel::sum_squares(k);
    if (kind == "sum_squares") {
        m = CostModel::sum_squares(k);
    } else if (kind == "sum_distances") {
        m = CostModel::sum_distances(k);
    } else if (kind == "pnorm") {
        m = CostModel::pnorm(k, number_at(j, "p", 2.0));
    } else if (kind == "max_distance") {
        m = CostModel::max_distance(k);
    } else if (kind == "collision_averse") {
        m = CostModel::collision_averse(number_at(j, "a", 1.0));
    } else if (kind == "bistatic_radar") {
        RadarParams r;
        r.gain = number_at(j, "gain", 1.0);
        r.noise = number_at(j, "noise", 1.0);
        r.threshold = j.contains("false_alarm") ? radar_threshold_for_false_alarm(number_at(j, "false_alarm", 0.0))
                                                : number_at(j, "threshold", 1.0);
        m = CostModel::bistatic_radar(r);
    } else {
        throw SchemaError("unknown cost kind '" + kind + "'");
    }
    if (m.arity() != k) throw SchemaError("cost '" + kind + "' takes " + std::to_string(m.arity()) + " distances but k is " + std::to_string(k));
    return m;
}

DensityField density_from(const json& j) {
    if (!j.is_object() || !j.contains("kind") || !j["kind"].is_string()) throw SchemaError("density.kind is required");
    const std::string kind = j["kind"];
    if (kind == "uniform") {
        only_keys(j, {"kind", "value"}, "density");
        return DensityField::uniform(number_at(j, "value", 1.0));
    }
    if (kind == "gaussian") {
        only_keys(j, {"kind", "mean", "covariance", "amplitude"}, "density");
        GaussianDensity g;
        if (j.contains("mean")) g.mean = io::point_from_json(j["mean"]);
        if (j.contains("covariance")) {
            const auto& c = j["covariance"];
            if (!c.is_array() || c.size() != 3) throw SchemaError("density.covariance must be [sxx, sxy, syy]");
            g.sxx = c[0].get<double>();
            g.sxy = c[1].get<double>();
            g.syy = c[2].get<double>();
        }
        g.amplitude = number_at(j, "amplitude", 1.0);
        return DensityField(g);
    }
    if (kind == "polynomial") {
        only_keys(j, {"kind", "terms"}, "density");
        PolynomialDensity p;
        if (!j.contains("terms") || !j["terms"].is_array()) throw SchemaError("density.terms is required");
        for (const auto& t : j["terms"]) {
            if (!t.is_array() || t.size() != 3 || !is_count(t[0]) || !is_count(t[1])) {
                throw SchemaError("density term must be [px, py, coef]");
            }
            p.terms.push_back({t[0].get<int>(), t[1].get<int>(), t[2].get<double>()});
        }
        return DensityField(p);
    }
    throw SchemaError("unknown density kind '" + kind + "'");
}

}  // namespace

Scenario parse_scenario(const json& doc, const fs::path& base_dir) {
    try {
        only_keys(doc, {"version", "name", "region", "n", "k", "seed", "cost", "density", "initial", "law",
                        "integrator", "iteration", "mmeans", "output"},
                  "scenario");
        if (!doc.contains("version") || doc["version"] != io::kFormatVersion) {
            throw SchemaError("scenario version must be " + std::to_string(io::kFormatVersion));
        }
        Scenario s;
        s.source = doc;
        if (doc.contains("name")) s.name = doc["name"].get<std::string>();
        if (doc.contains("region")) s.region = io::region_from_json(doc["region"]);
        s.n = count_at(doc, "n", 0);
        s.k = count_at(doc, "k", 1);
        if (doc.contains("seed") && !is_count(doc["seed"])) throw SchemaError("seed must be a non-negative integer");
        s.seed = doc.contains("seed") ? doc["seed"].get<std::uint64_t>() : 0;
        if (s.k == 0) throw SchemaError("k must be at least 1");
        s.cost = doc.contains("cost") ? cost_from(doc["cost"], s.k) : CostModel::sum_squares(s.k);
        if (doc.contains("density")) s.density = density_from(doc["density"]);

        if (doc.contains("initial")) {
            const auto& ini = doc["initial"];
            only_keys(ini, {"positions", "box"}, "initial");
            if (ini.contains("positions")) s.positions = points_from(ini["positions"], "initial.positions");
            if (ini.contains("box")) s.initial_box = box_from(ini["box"], "initial.box");
            if (s.positions && s.initial_box) throw SchemaError("initial takes positions or box, not both");
        }
        if (s.positions) {
            if (s.n == 0) s.n = s.positions->size();
            if (s.positions->size() != s.n) throw SchemaError("initial.positions must list n points");
            const auto* poly = s.region ? std::get_if<ConvexPolygon>(&*s.region) : nullptr;
            for (const Point2& p : *s.positions) {
                if (poly && !poly->contains(p, 1e-9 * poly->diameter())) {
                    throw SchemaError("initial position outside the region");
                }
            }
        }

        if (doc.contains("law")) {
            const auto& l = doc["law"];
            only_keys(l, {"kind", "gain"}, "law");
            const std::string kind = l.value("kind", "gradient_descent");
            const double gain = number_at(l, "gain", 1.0);
            if (kind == "gradient_descent") {
                s.law = ControlLaw::gradient_descent();
            } else if (kind == "centroid_tracking") {
                s.law = ControlLaw::centroid_tracking(gain);
            } else if (kind == "chebyshev_tracking") {
                s.law = ControlLaw::chebyshev_tracking(gain);
            } else {
                throw SchemaError("unknown law '" + kind + "'");
            }
        }
        if (doc.contains("integrator")) {
            const auto& g = doc["integrator"];
            only_keys(g, {"method", "h", "t_end", "stop_tol"}, "integrator");
            const std::string method = g.value("method", "rk4");
            if (method == "rk4") {
                s.integrator.integrator = Integrator::rk4;
            } else if (method == "euler") {
                s.integrator.integrator = Integrator::euler;
            } else {
                throw SchemaError("unknown integrator '" + method + "'");
            }
            s.integrator.step = number_at(g, "h", s.integrator.step);
            s.integrator.t_end = number_at(g, "t_end", s.integrator.t_end);
            s.integrator.stop_tol = number_at(g, "stop_tol", s.integrator.stop_tol);
            if (!(s.integrator.step > 0.0)) throw SchemaError("integrator.h must be positive");
            if (!(s.integrator.t_end >= 0.0)) throw SchemaError("integrator.t_end must be non-negative");
        }
        if (doc.contains("iteration")) {
            const auto& it = doc["iteration"];
            only_keys(it, {"tol", "max_cycles", "fd_step"}, "iteration");
            s.lloyd_tol = number_at(it, "tol", s.lloyd_tol);
            s.max_cycles = count_at(it, "max_cycles", s.max_cycles);
            s.fd_step = number_at(it, "fd_step", 0.0);
            if (!(s.lloyd_tol > 0.0)) throw SchemaError("iteration.tol must be positive");
        }
        if (doc.contains("mmeans")) {
            const auto& mm = doc["mmeans"];
            only_keys(mm, {"scene", "uniform", "initial_box", "initial_centers", "max_restarts"}, "mmeans");
            Scenario::MMeans m;
            if (mm.contains("scene") == mm.contains("uniform")) throw SchemaError("mmeans needs scene or uniform");
            if (mm.contains("scene")) {
                fs::path p = mm["scene"].get<std::string>();
                m.scene_file = p.is_absolute() ? p : base_dir / p;
            } else {
                const auto& u = mm["uniform"];
                only_keys(u, {"count", "box"}, "mmeans.uniform");
                m.uniform_count = count_at(u, "count", 0);
                if (m.uniform_count == 0) throw SchemaError("mmeans.uniform.count must be positive");
                if (u.contains("box")) m.uniform_box = box_from(u["box"], "mmeans.uniform.box");
            }
            if (mm.contains("initial_box")) m.initial_box = box_from(mm["initial_box"], "mmeans.initial_box");
            if (mm.contains("initial_centers")) {
                m.initial_centers = points_from(mm["initial_centers"], "mmeans.initial_centers");
                if (m.initial_centers->size() != s.n) throw SchemaError("mmeans.initial_centers must list n points");
            }
            m.max_restarts = count_at(mm, "max_restarts", 20);
            s.mmeans = std::move(m);
        }
        if (doc.contains("output")) s.output = doc["output"].get<std::string>();

        if (s.n < s.k) throw SchemaError("n must be at least k");
        if (!s.mmeans && !s.region) throw SchemaError("region is required");
        if (s.region && std::holds_alternative<Torus>(*s.region) && !s.density.is_uniform()) {
            throw SchemaError("the torus supports only a uniform density");
        }
        return s;
    } catch (const json::exception& e) {
        throw SchemaError(std::string("scenario: ") + e.what());
    }
}

Scenario load_scenario(const fs::path& path) {
    json doc;
    try {
        doc = json::parse(io::read_file(path));
    } catch (const json::exception& e) {
        throw SchemaError(path.string() + ": " + e.what());
    }
    return parse_scenario(doc, path.parent_path());
}

AgentConfiguration initial_configuration(const Scenario& s) {
    if (!s.region) throw SchemaError("region is required");
    if (s.positions) return AgentConfiguration(*s.positions, *s.region);
    const bool torus = std::holds_alternative<Torus>(*s.region);
    const ConvexPolygon domain = torus ? Torus::fundamental_square() : std::get<ConvexPolygon>(*s.region);
    const double gap = 1e-6 * domain.diameter();
    StreamRng rng(s.seed, Stream::init);
    std::vector<Point2> pts;
    std::size_t tries = 0;
    while (pts.size() < s.n) {
        if (++tries > 1000000) throw SchemaError("initial box leaves no room in the region");
        const Point2 p = s.initial_box ? uniform_in(rng, *s.initial_box) : uniform_in(rng, domain.bounds());
        if (!domain.contains(p) || (torus && (p.x >= 0.5 || p.y >= 0.5))) continue;
        bool ok = true;
        for (const Point2& q : pts) ok = ok && distance(p, q) >= gap;
        if (ok) pts.push_back(p);
    }
    return AgentConfiguration(std::move(pts), *s.region);
}

DiscreteScene mmeans_scene(const Scenario& s) {
    if (!s.mmeans) throw SchemaError("scenario has no mmeans block");
    if (s.mmeans->scene_file) return io::read_scene_csv(*s.mmeans->scene_file);
    StreamRng rng(s.seed, Stream::init, 1);
    DiscreteScene scene;
    for (std::size_t l = 0; l < s.mmeans->uniform_count; ++l) {
        scene.points.push_back(uniform_in(rng, s.mmeans->uniform_box));
        scene.weights.push_back(1.0);
    }
    return scene;
}

}  // namespace kcover
