#include "config.hpp"

#include <cstdio>
#include <fstream>
#include <limits>
#include <set>
#include <sstream>

#include "entk/data.hpp"
#include "entk/errors.hpp"

namespace entk::cli {

namespace {

class Section {
public:
    Section(const json& j, std::string path) : j_(j), path_(std::move(path))
    {
        if (!j_.is_object()) throw ConfigError(where() + ": expected an object");
    }

    const json* raw(const char* key)
    {
        seen_.insert(key);
        auto it = j_.find(key);
        return it == j_.end() ? nullptr : &*it;
    }

    int get_int(const char* key, int def, int lo = std::numeric_limits<int>::min())
    {
        const json* v = raw(key);
        if (!v) return def;
        if (!v->is_number_integer()) throw ConfigError(where(key) + ": expected an integer");
        long long x = v->get<long long>();
        if (x < lo || x > std::numeric_limits<int>::max()) throw ConfigError(where(key) + ": out of range");
        return static_cast<int>(x);
    }

    std::uint64_t get_u64(const char* key, std::uint64_t def)
    {
        const json* v = raw(key);
        if (!v) return def;
        if (!v->is_number_unsigned() && !(v->is_number_integer() && v->get<long long>() >= 0))
            throw ConfigError(where(key) + ": expected a non-negative integer");
        return v->get<std::uint64_t>();
    }

    double get_double(const char* key, double def)
    {
        const json* v = raw(key);
        if (!v) return def;
        if (!v->is_number()) throw ConfigError(where(key) + ": expected a number");
        return v->get<double>();
    }

    bool get_bool(const char* key, bool def)
    {
        const json* v = raw(key);
        if (!v) return def;
        if (!v->is_boolean()) throw ConfigError(where(key) + ": expected true or false");
        return v->get<bool>();
    }

    std::string get_string(const char* key, const std::string& def)
    {
        const json* v = raw(key);
        if (!v) return def;
        if (!v->is_string()) throw ConfigError(where(key) + ": expected a string");
        return v->get<std::string>();
    }

    std::vector<int> get_ints(const char* key, std::vector<int> def, int lo)
    {
        const json* v = raw(key);
        if (!v) return def;
        if (!v->is_array()) throw ConfigError(where(key) + ": expected a list of integers");
        std::vector<int> out;
        for (const auto& x : *v) {
            if (!x.is_number_integer() || x.get<long long>() < lo || x.get<long long>() > std::numeric_limits<int>::max())
                throw ConfigError(where(key) + ": expected integers >= " + std::to_string(lo));
            out.push_back(x.get<int>());
        }
        return out;
    }

    std::vector<double> get_doubles(const char* key, std::vector<double> def)
    {
        const json* v = raw(key);
        if (!v) return def;
        if (!v->is_array()) throw ConfigError(where(key) + ": expected a list of numbers");
        std::vector<double> out;
        for (const auto& x : *v) {
            if (!x.is_number()) throw ConfigError(where(key) + ": expected numbers");
            out.push_back(x.get<double>());
        }
        return out;
    }

    template <class F>
    auto parse_enum(const char* key, const std::string& def, F parse)
    {
        std::string s = get_string(key, def);
        try {
            return parse(s);
        } catch (const Error& e) {
            throw ConfigError(where(key) + ": " + e.what());
        }
    }

    void done() const
    {
        for (auto it = j_.begin(); it != j_.end(); ++it)
            if (!seen_.count(it.key())) throw ConfigError("unknown config key '" + where(it.key().c_str()) + "'");
    }

    std::string where(const char* key = nullptr) const
    {
        if (!key) return path_.empty() ? "config" : path_;
        return path_.empty() ? key : path_ + "." + key;
    }

private:
    const json& j_;
    std::string path_;
    std::set<std::string> seen_;
};

Layer parse_layer_string(const std::string& s, const std::string& where)
{
    auto colon = s.find(':');
    std::string name = s.substr(0, colon), arg = colon == std::string::npos ? "" : s.substr(colon + 1);
    Layer L;
    if (name == "relu" || name == "erf") {
        L = Layer::act(parse_nonlin(name));
        if (!arg.empty()) throw ConfigError(where + ": '" + s + "' takes no argument");
        return L;
    }
    L.type = parse_layer(name);
    if (arg.empty()) return L;
    int v = 0;
    if (arg == "global") v = 0;
    else {
        std::size_t used = 0;
        try {
            v = std::stoi(arg, &used);
        } catch (const std::exception&) {
            used = 0;
        }
        if (used != arg.size()) throw ConfigError(where + ": bad layer argument in '" + s + "'");
    }
    if (L.type == LayerType::fan_in_sum) L.branches = v;
    else if (L.type == LayerType::nonlin) throw ConfigError(where + ": use relu or erf for nonlinearities");
    else L.support = v;
    return L;
}

Layer parse_layer_object(const json& j, const std::string& where)
{
    Section s(j, where);
    Layer L;
    try {
        L.type = parse_layer(s.get_string("type", ""));
    } catch (const ConfigError& e) {
        throw ConfigError(where + ": " + e.what());
    }
    L.support = s.get_int("support", L.type == LayerType::nonlin ? 1 : 3, 0);
    L.nonlin = s.parse_enum("kind", "relu", parse_nonlin);
    L.branches = s.get_int("branches", 0, 0);
    s.done();
    return L;
}

template <class T, class F>
std::vector<T> parse_list(const json* j, const std::string& where, F one)
{
    std::vector<T> out;
    if (!j) {
        out.push_back(one(json::object(), where));
        return out;
    }
    if (j->is_array()) {
        for (std::size_t i = 0; i < j->size(); ++i) out.push_back(one((*j)[i], where + "[" + std::to_string(i) + "]"));
        return out;
    }
    out.push_back(one(*j, where));
    return out;
}

Thm6Config parse_thm6(const json& j, const std::string& where)
{
    Section s(j, where);
    Thm6Config c;
    c.height = s.get_int("height", c.height, 1);
    c.width = s.get_int("width", c.width, 1);
    c.depth = s.get_int("depth", c.depth, 1);
    c.support = s.get_int("support", c.support, 1);
    c.nonlin = s.parse_enum("nonlin", "relu", parse_nonlin);
    c.padding = s.parse_enum("padding", "circular", planar::parse_padding);
    c.channels = s.get_int("channels", c.channels, 1);
    c.trials = s.get_int("trials", c.trials, 1);
    c.seed = s.get_u64("seed", c.seed);
    c.tol = s.get_double("tol", c.tol);
    s.done();
    return c;
}

Thm5Config parse_thm5(const json& j, const std::string& where)
{
    Section s(j, where);
    Thm5Config c;
    c.height = s.get_int("height", c.height, 1);
    c.width = s.get_int("width", c.width, 1);
    c.depth = s.get_int("depth", c.depth, 1);
    c.gconv_support = s.get_int("gconv_support", c.gconv_support, 0);
    c.nonlin = s.parse_enum("nonlin", "relu", parse_nonlin);
    c.channels = s.get_int("channels", c.channels, 1);
    c.trials = s.get_int("trials", c.trials, 1);
    c.seed = s.get_u64("seed", c.seed);
    c.tol = s.get_double("tol", c.tol);
    s.done();
    return c;
}

Thm4Config parse_thm4(const json& j, const std::string& where)
{
    Section s(j, where);
    Thm4Config c;
    c.height = s.get_int("height", c.height, 1);
    c.width = s.get_int("width", c.width, 1);
    c.depth = s.get_int("depth", c.depth, 1);
    c.support = s.get_int("support", c.support, 1);
    c.nonlin = s.parse_enum("nonlin", "relu", parse_nonlin);
    c.channels = s.get_int("channels", c.channels, 1);
    c.n_train = s.get_int("n_train", c.n_train, 1);
    c.n_outputs = s.get_int("n_outputs", c.n_outputs, 1);
    c.n_noise = s.get_int("n_noise", c.n_noise, 0);
    c.times = s.get_doubles("times", c.times);
    c.eta = s.get_double("eta", c.eta);
    c.seed = s.get_u64("seed", c.seed);
    c.tol = s.get_double("tol", c.tol);
    s.done();
    return c;
}

DatasetConfig parse_dataset(const json* j)
{
    DatasetConfig d;
    if (!j) return d;
    Section s(*j, "dataset");
    std::string kind = s.get_string("kind", "rotclass");
    if (kind == "rotclass") d.kind = DatasetKind::rotclass;
    else if (kind == "images") d.kind = DatasetKind::images;
    else if (kind == "molecules") d.kind = DatasetKind::molecules;
    else throw ConfigError("dataset.kind: expected rotclass, images or molecules");
    d.classes = s.get_int("classes", d.classes, 1);
    d.height = s.get_int("height", d.height, 1);
    d.width = s.get_int("width", d.width, 1);
    d.noise = s.get_double("noise", d.noise);
    d.test_per_class = s.get_int("test_per_class", d.test_per_class, 1);
    d.path = s.get_string("path", d.path);
    d.labels = s.get_string("labels", d.labels);
    d.test_size = s.get_int("test_size", d.test_size, 1);
    d.count = s.get_int("count", d.count, 2);
    d.grid = s.parse_enum("grid", "gauss_legendre", so3::parse_grid_kind);
    d.grid_bandlimit = s.get_int("grid_bandlimit", d.grid_bandlimit, 0);
    d.standardize = s.get_bool("standardize", d.standardize);
    s.done();
    if (d.kind == DatasetKind::images && (d.path.empty() || d.labels.empty()))
        throw ConfigError("dataset: kind images needs path and labels");
    return d;
}

}  // namespace

ArchitectureSpec parse_architecture(const json& j, const std::string& where)
{
    Section s(j, where);
    ArchitectureSpec a;
    const json* layers = s.raw("layers");
    if (!layers || !layers->is_array() || layers->empty()) throw ConfigError(where + ".layers: expected a non-empty list");
    for (std::size_t i = 0; i < layers->size(); ++i) {
        const json& l = (*layers)[i];
        std::string w = where + ".layers[" + std::to_string(i) + "]";
        if (l.is_string()) a.layers.push_back(parse_layer_string(l.get<std::string>(), w));
        else a.layers.push_back(parse_layer_object(l, w));
    }
    a.group.n_rot = s.get_int("n_rot", a.group.n_rot, 1);
    a.group.padding = s.parse_enum("padding", "circular", planar::parse_padding);
    a.group.bandlimit = s.get_int("bandlimit", a.group.bandlimit, 0);
    a.group.grid = s.parse_enum("grid", "gauss_legendre", so3::parse_grid_kind);
    a.group.oversample = s.get_int("oversample", a.group.oversample, 1);
    s.done();
    try {
        validate(a);
    } catch (const DomainError& e) {
        throw ConfigError(where + ": " + e.what());
    }
    return a;
}

ArchitectureSpec default_architecture(DatasetKind kind, bool baseline)
{
    ArchitectureSpec a;
    if (kind == DatasetKind::molecules) {
        if (baseline) {
            a.layers = {Layer::flatten(), Layer::dense(), Layer::act(NonlinKind::relu), Layer::dense(), Layer::fan_in(data::kMaxAtoms),
                        Layer::dense()};
        } else {
            a.layers = {Layer::lifting(0), Layer::act(NonlinKind::erf), Layer::gconv(0), Layer::gpool(), Layer::fan_in(data::kMaxAtoms),
                        Layer::dense()};
            a.group.bandlimit = 3;
        }
        return a;
    }
    const auto R = NonlinKind::relu;
    if (baseline)
        a.layers = {Layer::conv(3), Layer::act(R), Layer::conv(3), Layer::act(R), Layer::conv(3), Layer::act(R),
                    Layer::sumpool(), Layer::dense(), Layer::act(R), Layer::dense()};
    else
        a.layers = {Layer::lifting(3), Layer::act(R), Layer::gconv(3), Layer::act(R), Layer::gconv(3), Layer::act(R),
                    Layer::gpool(), Layer::dense(), Layer::act(R), Layer::dense()};
    return a;
}

void apply_override(json& j, const std::string& assignment)
{
    auto eq = assignment.find('=');
    if (eq == std::string::npos || eq == 0) throw ConfigError("override '" + assignment + "' is not key=value");
    std::string key = assignment.substr(0, eq), text = assignment.substr(eq + 1);
    json value = json::parse(text, nullptr, false);
    if (value.is_discarded()) value = text;
    json* cur = &j;
    std::size_t start = 0;
    while (true) {
        auto dot = key.find('.', start);
        std::string part = key.substr(start, dot == std::string::npos ? std::string::npos : dot - start);
        if (part.empty()) throw ConfigError("override '" + assignment + "' has an empty key");
        if (!cur->is_object()) throw ConfigError("override '" + key + "' descends into a non-object");
        if (dot == std::string::npos) {
            (*cur)[part] = value;
            return;
        }
        cur = &(*cur)[part];
        if (cur->is_null()) *cur = json::object();
        start = dot + 1;
    }
}

std::string config_hash(const json& j)
{
    json c = j;
    if (c.is_object()) {
        c.erase("threads");
        c.erase("output_dir");
        if (c.contains("gram") && c["gram"].is_object()) {
            c["gram"].erase("stop_after_rows");
            if (c["gram"].empty()) c.erase("gram");
        }
    }
    std::string s = c.dump();
    std::uint64_t h = 1469598103934665603ull;
    for (unsigned char ch : s) {
        h ^= ch;
        h *= 1099511628211ull;
    }
    char buf[17];
    std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(h));
    return buf;
}

RunConfig parse_config(const json& j)
{
    RunConfig c;
    c.effective = j;
    c.hash = config_hash(j);
    Section s(j, "");
    c.seed = s.get_u64("seed", c.seed);
    c.threads = s.get_int("threads", c.threads, 0);
    c.output_dir = s.get_string("output_dir", c.output_dir);
    c.dataset = parse_dataset(s.raw("dataset"));
    const json* a = s.raw("architecture");
    c.arch = a ? parse_architecture(*a, "architecture") : default_architecture(c.dataset.kind, false);
    const json* b = s.raw("baseline");
    c.baseline = b ? parse_architecture(*b, "baseline") : default_architecture(c.dataset.kind, true);
    c.train_sizes = s.get_ints("train_sizes", c.train_sizes, 1);
    if (c.train_sizes.empty()) throw ConfigError("train_sizes: expected at least one size");
    if (const json* r = s.raw("ridge"); r && !r->is_null()) {
        if (r->is_string() && r->get<std::string>() == "loo") {
            c.ridge_loo = true;
        } else {
            if (!r->is_number() || r->get<double>() < 0) throw ConfigError("ridge: expected a non-negative number, \"loo\" or null");
            c.ridge = r->get<double>();
        }
    }
    c.rotation_check = s.get_bool("rotation_check", c.rotation_check);
    c.times = s.get_doubles("times", c.times);
    for (double t : c.times)
        if (!(t >= 0)) throw ConfigError("times: expected non-negative values");
    c.eta = s.get_double("eta", c.eta);
    if (!(c.eta > 0)) throw ConfigError("eta: expected a positive number");

    if (const json* m = s.raw("mc")) {
        Section ms(*m, "mc");
        c.mc.widths = ms.get_ints("widths", c.mc.widths, 1);
        c.mc.samples = ms.get_int("samples", c.mc.samples, 2);
        c.mc.inputs = ms.get_int("inputs", c.mc.inputs, 1);
        c.mc.height = ms.get_int("height", c.mc.height, 1);
        c.mc.width = ms.get_int("width", c.mc.width, 1);
        c.mc.channels = ms.get_int("channels", c.mc.channels, 1);
        c.mc.nonlin = ms.parse_enum("nonlin", "relu", parse_nonlin);
        c.mc.support = ms.get_int("support", c.mc.support, 1);
        ms.done();
        if (c.mc.widths.empty()) throw ConfigError("mc.widths: expected at least one width");
    }
    if (const json* g = s.raw("gram")) {
        Section gs(*g, "gram");
        c.gram.count = gs.get_int("count", c.gram.count, 0);
        c.gram.baseline = gs.get_bool("baseline", c.gram.baseline);
        c.gram.stop_after_rows = gs.get_int("stop_after_rows", c.gram.stop_after_rows, -1);
        gs.done();
    }
    if (const json* v = s.raw("verify")) {
        Section vs(*v, "verify");
        c.verify.thm4 = parse_list<Thm4Config>(vs.raw("thm4"), "verify.thm4", parse_thm4);
        c.verify.thm5 = parse_list<Thm5Config>(vs.raw("thm5"), "verify.thm5", parse_thm5);
        c.verify.thm6 = parse_list<Thm6Config>(vs.raw("thm6"), "verify.thm6", parse_thm6);
        vs.done();
    }
    s.done();
    return c;
}

RunConfig load_config(const std::string& path, const std::vector<std::string>& overrides)
{
    json j = json::object();
    if (!path.empty()) {
        std::ifstream is(path);
        if (!is) throw IoError("cannot open config '" + path + "'");
        std::stringstream ss;
        ss << is.rdbuf();
        j = json::parse(ss.str(), nullptr, false);
        if (j.is_discarded()) throw ConfigError("config '" + path + "' is not valid JSON");
        if (!j.is_object()) throw ConfigError("config '" + path + "' must hold an object");
    }
    for (const auto& o : overrides) apply_override(j, o);
    return parse_config(j);
}

}  // namespace entk::cli
