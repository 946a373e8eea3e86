#include "wp/io.hpp"

#include <fstream>
#include <ostream>
#include <sstream>

#include <json.hpp>

namespace wp {

namespace {

using nlohmann::json;

json field_to_json_obj(const SampledField& f) {
    json j;
    j["L"] = f.grid().length;
    j["N"] = f.grid().n;
    std::vector<double> re(f.samples().size()), im(f.samples().size());
    for (std::size_t i = 0; i < f.samples().size(); ++i) {
        re[i] = f.samples()[i].real();
        im[i] = f.samples()[i].imag();
    }
    j["re"] = re;
    j["im"] = im;
    return j;
}

SampledField field_from_json_obj(const json& j) {
    SpatialGrid g(j.at("N").get<int>(), j.at("L").get<double>());
    const auto re = j.at("re").get<std::vector<double>>();
    const auto im = j.at("im").get<std::vector<double>>();
    if (re.size() != static_cast<std::size_t>(g.n) || im.size() != re.size())
        throw std::invalid_argument("field json: sample count mismatch");
    std::vector<cplx> v(re.size());
    for (std::size_t i = 0; i < re.size(); ++i) v[i] = cplx(re[i], im[i]);
    return SampledField::from_samples(g, std::move(v));
}

}  // namespace

std::string to_json(const SampledField& f) { return field_to_json_obj(f).dump(); }

SampledField field_from_json(const std::string& text) {
    return field_from_json_obj(json::parse(text));
}

std::string to_json(const Metric& m) {
    json j = field_to_json_obj(m.a());
    j["M_bound"] = m.m_bound();
    j["kind"] = m.recipe().kind;
    j["params"] = {{"base", m.recipe().base},
                   {"amplitude", m.recipe().amplitude},
                   {"knots", m.recipe().knots},
                   {"harmonic", m.recipe().harmonic}};
    j["seed"] = m.recipe().seed;
    return j.dump();
}

Metric metric_from_json(const std::string& text) {
    const json j = json::parse(text);
    MetricRecipe r;
    r.kind = j.at("kind").get<std::string>();
    r.seed = j.at("seed").get<std::uint64_t>();
    const auto& p = j.at("params");
    r.base = p.at("base").get<double>();
    r.amplitude = p.at("amplitude").get<double>();
    r.knots = p.at("knots").get<int>();
    r.harmonic = p.at("harmonic").get<int>();
    SampledField a = field_from_json_obj(j);
    if (r.kind == "constant" || r.kind == "smooth-trig" || r.kind == "quadratic-spline-rough")
        return make_metric(a.grid(), r);  // exact re-materialization
    return Metric(a, j.at("M_bound").get<double>(), r);
}

std::string to_json(const PhaseSpaceField& f) {
    json j;
    j["lambda"] = f.grid->lambda;
    std::vector<double> xs(static_cast<std::size_t>(f.grid->nx));
    for (int i = 0; i < f.grid->nx; ++i) xs[static_cast<std::size_t>(i)] = f.grid->x(i);
    j["x"] = xs;
    j["xi"] = f.grid->xi;
    const int nxi = f.grid->nxi();
    std::vector<std::vector<double>> re(xs.size()), im(xs.size());
    for (std::size_t i = 0; i < xs.size(); ++i) {
        re[i].resize(static_cast<std::size_t>(nxi));
        im[i].resize(static_cast<std::size_t>(nxi));
        for (int q = 0; q < nxi; ++q) {
            re[i][static_cast<std::size_t>(q)] = f.v[i * nxi + static_cast<std::size_t>(q)].real();
            im[i][static_cast<std::size_t>(q)] = f.v[i * nxi + static_cast<std::size_t>(q)].imag();
        }
    }
    j["re"] = re;
    j["im"] = im;
    return j.dump();
}

void write_csv(const SampledField& f, std::ostream& out) {
    out << "x,re,im\n";
    for (int i = 0; i < f.grid().n; ++i) {
        const auto& c = f.samples()[static_cast<std::size_t>(i)];
        out << f.grid().x(i) << ',' << c.real() << ',' << c.imag() << '\n';
    }
}

void write_heatmap_csv(const PhaseSpaceField& f, std::ostream& out) {
    out << "x,xi,abs\n";
    const int nxi = f.grid->nxi();
    for (int i = 0; i < f.grid->nx; ++i)
        for (int j = 0; j < nxi; ++j)
            out << f.grid->x(i) << ',' << f.grid->xi[static_cast<std::size_t>(j)] << ','
                << std::abs(f.v[static_cast<std::size_t>(i) * nxi + j]) << '\n';
}

std::string read_file(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw std::runtime_error("cannot open " + path);
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

void write_file(const std::string& path, const std::string& content) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw std::runtime_error("cannot write " + path);
    out << content;
}

}  // namespace wp
