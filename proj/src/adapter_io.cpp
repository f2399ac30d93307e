#include <json.hpp>

#include <fstream>

#include "tsdlab/adapters.hpp"
#include "tsdlab/matrix_io.hpp"

namespace tsdlab {

namespace {

Matrix vector_as_column(const std::vector<double>& v) {
    return Matrix(static_cast<int>(v.size()), 1, v);
}

}  // namespace

void save_adapter(const AdapterState& s, const std::filesystem::path& dir) {
    std::error_code ec;
    std::filesystem::create_directories(dir, ec);
    if (ec) throw IoError("cannot create directory: " + dir.string());

    nlohmann::json meta;
    meta["method"] = to_string(s.method);
    meta["phase"] = to_string(s.phase);
    meta["r"] = s.core.rank;
    meta["s"] = s.dash ? static_cast<int>(s.dash->indices.size()) : 0;
    meta["alpha"] = s.core.alpha;
    meta["indices"] = s.dash ? s.dash->indices : std::vector<int>{};
    meta["split_indices"] = s.split_indices;

    std::ofstream os(dir / "meta.json");
    if (!os) throw IoError("cannot write " + (dir / "meta.json").string());
    os << meta.dump(2) << "\n";

    save_tsdw(s.base, dir / "base.tsdw");
    save_tsdw(s.core.a, dir / "a.tsdw");
    save_tsdw(s.core.b, dir / "b.tsdw");
    if (s.dash) {
        save_tsdw(vector_as_column(s.dash->dsigma), dir / "dsigma.tsdw");
        save_tsdw(s.dash->u_bar, dir / "u_bar.tsdw");
        save_tsdw(s.dash->v_bar, dir / "v_bar.tsdw");
    }
}

AdapterState load_adapter(const std::filesystem::path& dir) {
    std::ifstream is(dir / "meta.json");
    if (!is) throw IoError("cannot read " + (dir / "meta.json").string());
    nlohmann::json meta;
    try {
        is >> meta;
    } catch (const nlohmann::json::exception& e) {
        throw IoError("bad meta.json in " + dir.string() + ": " + e.what());
    }

    AdapterState s;
    try {
        s.method = method_from_string(meta.at("method").get<std::string>());
        s.phase = phase_from_string(meta.at("phase").get<std::string>());
        s.core.rank = meta.at("r").get<int>();
        s.core.alpha = meta.at("alpha").get<double>();
        s.split_indices = meta.value("split_indices", std::vector<int>{});
        s.base = load_tsdw(dir / "base.tsdw");
        s.core.a = load_tsdw(dir / "a.tsdw");
        s.core.b = load_tsdw(dir / "b.tsdw");
        if (meta.at("s").get<int>() > 0) {
            DashTerm d;
            d.indices = meta.at("indices").get<std::vector<int>>();
            Matrix ds = load_tsdw(dir / "dsigma.tsdw");
            d.dsigma.assign(ds.data().begin(), ds.data().end());
            d.u_bar = load_tsdw(dir / "u_bar.tsdw");
            d.v_bar = load_tsdw(dir / "v_bar.tsdw");
            if (d.dsigma.size() != d.indices.size()) throw IoError("dsigma length mismatch in " + dir.string());
            s.dash = std::move(d);
        }
    } catch (const nlohmann::json::exception& e) {
        throw IoError("bad meta.json in " + dir.string() + ": " + e.what());
    }
    return s;
}

}  // namespace tsdlab
