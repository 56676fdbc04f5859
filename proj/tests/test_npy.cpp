#include <gtest/gtest.h>

#include <cstring>

#include "csiloc/data/npy.hpp"
#include "oracles.hpp"
#include "test_util.hpp"

using namespace csiloc;
using namespace csiloc::data;

namespace {

using oracle::npy_bytes;
using oracle::raw;


std::string message_of(const std::string& bytes) {
    try {
        parse_npy(bytes);
    } catch (const FormatError& e) {
        return e.what();
    }
    return "";
}

} // namespace

TEST(Npy, MinimalFloat32Fixture) {
    std::vector<float> v(16 * 4 * 2);
    for (std::size_t i = 0; i < v.size(); ++i) v[i] = float(i) * 0.5f;
    const auto bytes =
        npy_bytes("{'descr': '<f4', 'fortran_order': False, 'shape': (1, 16, 4, 2), }", raw(v));
    const auto arr = parse_npy(bytes);
    EXPECT_EQ(arr.descr, "<f4");
    EXPECT_EQ(arr.shape, (std::vector<std::size_t>{1, 16, 4, 2}));
    ASSERT_EQ(arr.values.size(), v.size());
    EXPECT_EQ(arr.values[7], 3.5);

    NpyArray snr{"<f4", {1, 16}, std::vector<double>(16, 20.0)};
    NpyArray pos{"<f8", {1, 3}, {0.5, 1.5, 1.0}};
    const auto ds = import_npy_arrays(arr, snr, pos);
    ASSERT_EQ(ds.size(), 1u);
    EXPECT_EQ(ds.samples[0].csi.shape(), (Shape{2, 16, 4}));
    // element (antenna 3, subcarrier 1): re at flat index ((3*4)+1)*2, im right after
    EXPECT_EQ(ds.samples[0].csi.at(0, 3, 1), double(v[26]));
    EXPECT_EQ(ds.samples[0].csi.at(1, 3, 1), double(v[27]));
}

TEST(Npy, Float64AndOneElementShapes) {
    const auto bytes = npy_bytes("{'descr': '<f8', 'fortran_order': False, 'shape': (3,), }",
                                 raw(std::vector<double>{0.1, -2.0, 1e300}));
    const auto arr = parse_npy(bytes);
    EXPECT_EQ(arr.shape, (std::vector<std::size_t>{3}));
    EXPECT_EQ(arr.values, (std::vector<double>{0.1, -2.0, 1e300}));
}

TEST(Npy, Complex64SplitsIntoReImPlanes) {
    const auto bytes = npy_bytes("{'descr': '<c8', 'fortran_order': False, 'shape': (1, 1, 1), }",
                                 raw(std::vector<float>{1.25f, -3.5f}));
    const auto csi = parse_npy(bytes);
    EXPECT_TRUE(csi.complex());
    const auto ds = import_npy_arrays(csi, NpyArray{"<f4", {1, 1}, {15.0}}, NpyArray{"<f4", {1, 3}, {1, 2, 1}});
    EXPECT_EQ(ds.samples[0].csi.at(0, 0, 0), 1.25);
    EXPECT_EQ(ds.samples[0].csi.at(1, 0, 0), -3.5);
}

TEST(Npy, RejectionsHaveDistinctMessages) {
    const auto payload = raw(std::vector<float>{1, 2});
    const auto fortran = message_of(npy_bytes("{'descr': '<f4', 'fortran_order': True, 'shape': (2,), }", payload));
    const auto v2 = message_of(npy_bytes("{'descr': '<f4', 'fortran_order': False, 'shape': (2,), }", payload, 2, 0));
    const auto i4 = message_of(npy_bytes("{'descr': '<i4', 'fortran_order': False, 'shape': (2,), }", payload));
    EXPECT_NE(fortran.find("fortran_order"), std::string::npos) << fortran;
    EXPECT_NE(v2.find("version 2.0"), std::string::npos) << v2;
    EXPECT_NE(i4.find("'<i4'"), std::string::npos) << i4;
    EXPECT_NE(fortran, v2);
    EXPECT_NE(v2, i4);
    EXPECT_NE(fortran, i4);
}

TEST(Npy, RejectsMalformedInput) {
    EXPECT_THROW(parse_npy("hello"), FormatError);
    const auto payload = raw(std::vector<float>{1, 2, 3});
    // payload shorter than the declared shape
    EXPECT_THROW(parse_npy(npy_bytes("{'descr': '<f4', 'fortran_order': False, 'shape': (4,), }", payload)),
                 FormatError);
    EXPECT_THROW(parse_npy(npy_bytes("{'descr': '<f4', 'shape': (3,), }", payload)), FormatError);
    EXPECT_THROW(parse_npy(npy_bytes("{'descr': '<f4', 'fortran_order': False, 'shape': 3, }", payload)),
                 FormatError);
    EXPECT_THROW(parse_npy(npy_bytes("['<f4']", payload)), FormatError);
}

TEST(Npy, InconsistentSampleCountsAreRejected) {
    NpyArray csi{"<f4", {2, 1, 1, 2}, {1, 2, 3, 4}};
    NpyArray snr{"<f4", {3, 1}, {1, 2, 3}};
    NpyArray pos{"<f4", {2, 3}, {1, 2, 3, 4, 5, 6}};
    try {
        import_npy_arrays(csi, snr, pos);
        FAIL();
    } catch (const FormatError& e) {
        EXPECT_NE(std::string(e.what()).find("inconsistent sample counts"), std::string::npos);
    }
    EXPECT_THROW(import_npy_arrays(NpyArray{"<f4", {2, 1, 1, 3}, std::vector<double>(6)}, snr, pos), FormatError);
}

TEST(Npy, WriterOutputParsesAndIsAligned) {
    NpyArray a{"<f4", {2, 3}, {1, 2, 3, 4, 5, 6}};
    const auto bytes = serialize_npy(a);
    EXPECT_EQ(bytes.substr(0, 8), std::string("\x93NUMPY\x01\x00", 8));
    const std::size_t hlen = static_cast<unsigned char>(bytes[8]) | (static_cast<unsigned char>(bytes[9]) << 8);
    EXPECT_EQ((10 + hlen) % 64, 0u);
    EXPECT_EQ(bytes[10 + hlen - 1], '\n');
    const auto back = parse_npy(bytes);
    EXPECT_EQ(back.shape, a.shape);
    EXPECT_EQ(back.values, a.values);
}

TEST(Npy, ImporterRoundTripsCanonicalWriterForEveryDtype) {
    const auto ds = testutil::toy_dataset(4, 3, 5);
    for (const auto& [csi_descr, real_descr] :
         std::vector<std::pair<std::string, std::string>>{{"<f4", "<f4"}, {"<f8", "<f8"}, {"<c8", "<f4"}}) {
        const auto dir = testutil::scratch_dir("npy" + csi_descr.substr(1));
        export_npy(ds, dir, csi_descr, real_descr);
        const auto back = import_npy(dir / "csi.npy", dir / "snr.npy", dir / "pos.npy", ds.frame);
        ASSERT_EQ(back.size(), ds.size());
        for (std::size_t i = 0; i < ds.size(); ++i) {
            EXPECT_TRUE(back.samples[i].csi == ds.samples[i].csi) << csi_descr;
            EXPECT_EQ(back.samples[i].snr, ds.samples[i].snr);
            auto pos = ds.samples[i].position;
            if (real_descr == "<f4")
                for (int d = 0; d < 3; ++d) pos[d] = static_cast<double>(static_cast<float>(pos[d]));
            for (int d = 0; d < 3; ++d)
                EXPECT_EQ(back.samples[i].position[d], pos[d]) << real_descr << " sample " << i;
        }
        // and the canonical container reproduces it bit-exactly
        save_canonical(back, dir / "canon");
        const auto canon = load_canonical(dir / "canon");
        for (std::size_t i = 0; i < ds.size(); ++i) EXPECT_TRUE(canon.samples[i].csi == ds.samples[i].csi);
    }
}
