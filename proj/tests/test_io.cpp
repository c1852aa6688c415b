#include <cstdio>
#include <filesystem>
#include <fstream>
#include <set>

#include <gtest/gtest.h>

#include "imasim/scenario.hpp"

using namespace imasim;
using nlohmann::json;

namespace {

ErrorCode code_of(const std::function<void()>& f) {
    try {
        f();
    } catch (const Error& e) {
        return e.code();
    }
    ADD_FAILURE() << "expected an imasim::Error";
    return ErrorCode::Io;
}

std::string temp_file(const std::string& name, const std::string& body) {
    const auto p = std::filesystem::temp_directory_path() / ("imasim_io_" + name);
    std::ofstream(p) << body;
    return p.string();
}

json cal_json() { return json::parse(to_json(Calibration{}).dump()); }

} // namespace

TEST(Calibration, ShippedFileEqualsCompiledDefaults) {
    const Calibration file = load_calibration(std::string(IMASIM_SOURCE_DIR) + "/calibration/default.json");
    EXPECT_EQ(to_json(file), to_json(Calibration{}));
}

TEST(Calibration, JsonRoundTrip) {
    Calibration c;
    c.cluster.eta_dw = 0.2;
    c.ima.overlap_streamin_compute = true;
    c.energy.e_job_pj = 3.5;
    const Calibration back = calibration_from_json(json::parse(to_json(c).dump()));
    EXPECT_EQ(to_json(back), to_json(c));
}

TEST(Calibration, StrictReader) {
    json j = cal_json();
    j["cluster"]["n_cores_typo"] = 8;
    EXPECT_EQ(code_of([&] { (void)calibration_from_json(j); }), ErrorCode::Validation);
    j = cal_json();
    j["schema_version"] = 2;
    EXPECT_EQ(code_of([&] { (void)calibration_from_json(j); }), ErrorCode::Validation);
    j = cal_json();
    j["cluster"]["n_cores"] = "eight";
    EXPECT_EQ(code_of([&] { (void)calibration_from_json(j); }), ErrorCode::Validation);
    j = cal_json();
    j["cluster"]["eta_dw"] = 1.5;
    EXPECT_EQ(code_of([&] { (void)calibration_from_json(j); }), ErrorCode::Validation);
    j = cal_json();
    j["extra"] = json::object();
    EXPECT_EQ(code_of([&] { (void)calibration_from_json(j); }), ErrorCode::Validation);
    // Missing keys keep their defaults.
    const Calibration partial = calibration_from_json(json::parse(R"({"schema_version":1,"cluster":{"eta_dw":0.3}})"));
    EXPECT_DOUBLE_EQ(partial.cluster.eta_dw, 0.3);
    EXPECT_DOUBLE_EQ(partial.cluster.eta_conv, 0.55);
}

TEST(Calibration, Overrides) {
    Calibration c;
    apply_override(c, "cluster.eta_dw=0.25");
    EXPECT_DOUBLE_EQ(c.cluster.eta_dw, 0.25);
    apply_override(c, "cluster.n_cores=4");
    EXPECT_EQ(c.cluster.n_cores, 4);
    apply_override(c, "ima.overlap_streamin_compute=true");
    EXPECT_TRUE(c.ima.overlap_streamin_compute);
    EXPECT_THROW(apply_override(c, "cluster.bogus=1"), Error);
    EXPECT_THROW(apply_override(c, "cluster.eta_dw"), Error);
    EXPECT_THROW(apply_override(c, "cluster.eta_dw=fast"), Error);
    EXPECT_THROW(apply_override(c, "cluster.eta_dw=0"), Error);
    EXPECT_THROW(apply_override(c, "cluster.n_cores=2.5"), Error);
    EXPECT_THROW(apply_override(c, "ima.overlap_streamin_compute=yes"), Error);
}

TEST(Calibration, MissingFileIsIoError) {
    EXPECT_EQ(code_of([] { (void)load_calibration("/nonexistent/cal.json"); }), ErrorCode::Io);
    const auto bad = temp_file("bad_cal.json", "{ not json");
    EXPECT_EQ(code_of([&] { (void)load_calibration(bad); }), ErrorCode::Validation);
}

TEST(Calibration, FieldNamesUnique) {
    std::set<std::string> names;
    for (const auto& f : calibration_fields()) EXPECT_TRUE(names.insert(f.path()).second) << f.path();
    EXPECT_EQ(names.size(), 24u);
    const json j = cal_json();
    std::size_t leaves = 0;
    for (const auto& [k, v] : j.items())
        if (v.is_object()) leaves += v.size();
    EXPECT_EQ(leaves, names.size());
}

TEST(Workload, LayerRoundTrip) {
    for (const LayerDescriptor& l : {LayerDescriptor{StandardConv{3, 2, 1, 8, 16}}, LayerDescriptor{DepthwiseConv{5, 1, 2, 24}},
                                     LayerDescriptor{PointwiseConv{7, 3}}})
        EXPECT_EQ(io::layer_from_json(json::parse(io::to_json(l).dump())), l);
    EXPECT_EQ(io::layer_from_json(json::parse(R"({"type":"depthwise","k":3,"c":4})")), (LayerDescriptor{DepthwiseConv{3, 1, 0, 4}}));
}

TEST(Workload, LayerErrors) {
    for (const char* bad : {R"({"type":"dense","c_in":1})", R"({"k":3})", R"({"type":"pointwise","c_in":4})",
                            R"({"type":"pointwise","c_in":4,"c_out":4,"k":1})", R"({"type":"standard","k":0,"c_in":1,"c_out":1})",
                            R"({"type":"depthwise","k":3,"c":-1})", R"({"type":"depthwise","k":"3","c":2})"})
        EXPECT_EQ(code_of([&] { (void)io::layer_from_json(json::parse(bad)); }), ErrorCode::Validation) << bad;
}

TEST(Workload, NetworkAndBottleneckRoundTrip) {
    const auto net = mobilenet_v2_preset();
    EXPECT_EQ(io::workload_from_json(json::parse(io::to_json(net).dump())), net);
    const BottleneckDescriptor b{24, 6, 32, 2, 28, 28};
    EXPECT_EQ(io::bottleneck_from_json(json::parse(io::to_json(b).dump())), b);
    EXPECT_EQ(io::workload_from_json(json::parse(io::to_json(b).dump())), b.to_network());
}

TEST(Workload, SingleLayerDocument) {
    const auto net = io::workload_from_json(json::parse(
        R"({"kind":"layer","name":"c","layer":{"type":"standard","k":3,"pad":1,"c_in":32,"c_out":64},"input":{"height":16,"width":16}})"));
    ASSERT_EQ(net.layers.size(), 1u);
    EXPECT_EQ(net.layers[0].macs(), 4'718'592);
}

TEST(Workload, DocumentErrors) {
    for (const char* bad : {R"({"kind":"graph"})", R"([1,2])", R"({"kind":"bottleneck","c_in":32})",
                            R"({"kind":"bottleneck","c_in":32,"expansion":6,"c_out":32,"height":8,"width":8,"depth":3})",
                            R"({"kind":"network","layers":[{"layer":{"type":"pointwise","c_in":4,"c_out":4},"input":{"height":2,"width":2,"channels":4}},{"layer":{"type":"pointwise","c_in":8,"c_out":4},"input":{"height":2,"width":2,"channels":8}}]})",
                            R"({"kind":"layer","layer":{"type":"pointwise","c_in":4,"c_out":4},"input":{"height":2,"width":2,"channels":3}})",
                            R"({"kind":"layer","layer":{"type":"pointwise","c_in":4,"c_out":4},"input":{"height":2,"width":2},"role":"tail"})"})
        EXPECT_EQ(code_of([&] { (void)io::workload_from_json(json::parse(bad)); }), ErrorCode::Validation) << bad;
}

TEST(Workload, Presets) {
    EXPECT_EQ(io::preset("bottleneck").macs(), 14'352'384);
    EXPECT_EQ(io::preset("baseline-conv").macs(), 4'718'592);
    EXPECT_EQ(bottleneck_count(io::preset("mobilenetv2")), 17);
    EXPECT_EQ(code_of([] { (void)io::preset("resnet"); }), ErrorCode::Validation);
}

TEST(Workload, ReadJsonFileErrors) {
    EXPECT_EQ(code_of([] { (void)io::read_json_file("/nonexistent/w.json"); }), ErrorCode::Io);
    const auto bad = temp_file("bad.json", "{");
    EXPECT_EQ(code_of([&] { (void)io::read_json_file(bad); }), ErrorCode::Validation);
}

TEST(Scenario, FullDocument) {
    const auto s = scenario_from_json(json::parse(R"({
        "schema_version": 1, "comment": "x", "workload": "baseline-conv", "plan": "ima8", "ports": "2/4",
        "sweep": {"plans": ["sw", "hybrid"], "ports": ["1/1", "16/16"]},
        "overrides": ["cluster.eta_dw=0.2"], "seed": 9, "cases": 10, "format": "json", "out": "x.json"})"));
    EXPECT_EQ(s.workload_label, "baseline-conv");
    EXPECT_EQ(s.plan, timing::PlanSpec::ima(8));
    EXPECT_EQ(s.ports, (timing::PortConfig{2, 4}));
    EXPECT_EQ(s.sweep_plans.size(), 2u);
    EXPECT_EQ(s.sweep_ports.back(), (timing::PortConfig{16, 16}));
    EXPECT_DOUBLE_EQ(s.calibration().cluster.eta_dw, 0.2);
    EXPECT_EQ(s.seed, 9u);
    EXPECT_EQ(s.cases, 10);
    EXPECT_EQ(*s.format, "json");
    EXPECT_EQ(*s.out, "x.json");
}

TEST(Scenario, DefaultsAndInlineWorkload) {
    const auto d = scenario_from_json(json::parse(R"({"schema_version":1})"));
    EXPECT_EQ(d.workload.macs(), 14'352'384);
    EXPECT_EQ(d.plan, timing::PlanSpec::hybrid());
    EXPECT_EQ(d.sweep_ports.size(), 5u);
    const auto inl = scenario_from_json(json::parse(
        R"({"schema_version":1,"workload":{"kind":"bottleneck","c_in":16,"expansion":6,"c_out":24,"stride":2,"height":16,"width":16}})"));
    EXPECT_EQ(inl.workload, (BottleneckDescriptor{16, 6, 24, 2, 16, 16}.to_network()));
}

TEST(Scenario, Errors) {
    for (const char* bad : {R"({})", R"({"schema_version":2})", R"({"schema_version":1,"plans":"sw"})",
                            R"({"schema_version":1,"plan":"ima"})", R"({"schema_version":1,"ports":"3/3"})",
                            R"({"schema_version":1,"sweep":{"plans":[]}})", R"({"schema_version":1,"sweep":{"ports":[4]}})",
                            R"({"schema_version":1,"overrides":["cluster.nope=1"]})", R"({"schema_version":1,"seed":-1})",
                            R"({"schema_version":1,"format":"xml"})", R"({"schema_version":1,"workload":"vgg"})"})
        EXPECT_EQ(code_of([&] { (void)scenario_from_json(json::parse(bad)); }), ErrorCode::Validation) << bad;
    EXPECT_EQ(code_of([] { (void)load_scenario("/nonexistent/s.json"); }), ErrorCode::Io);
    const auto missing_cal = scenario_from_json(json::parse(R"({"schema_version":1,"calibration":"/nonexistent/c.json"})"));
    EXPECT_EQ(code_of([&] { (void)missing_cal.calibration(); }), ErrorCode::Io);
}
