#include <gtest/gtest.h>

#include <cstring>
#include <random>
#include <sstream>

#include "oracles.hpp"
#include "tpc/fourier.hpp"
#include "tpc/tensor3.hpp"
#include "tpc/tns_io.hpp"

using namespace tpc;

namespace {

Tensor3 from_slices(Index l, Index m, std::initializer_list<Matrix> slices) {
  Tensor3 t(l, m, static_cast<Index>(slices.size()));
  Index k = 0;
  for (const auto& s : slices) t.frontal(k++) = s;
  return t;
}

}  // namespace

TEST(Tensor3, VecOrderingMatchesColumnStackingOfFrontalSlices) {
  Tensor3 t(2, 3, 2);
  for (Index i = 0; i < t.size(); ++i) t.flat()[static_cast<std::size_t>(i)] = static_cast<double>(i);
  EXPECT_EQ(t(1, 2, 1), static_cast<double>((1 * 3 + 2) * 2 + 1));
  EXPECT_EQ(t.frontal(1)(0, 1), t(0, 1, 1));
  EXPECT_THROW(Tensor3(2, 2, 2, std::vector<double>(7)), InvalidArgument);
}

TEST(Squeeze, LateralSliceToMatrix) {
  Matrix s0(2, 1), s1(2, 1);
  s0 << 1, 2;
  s1 << 3, 4;
  const Matrix m = squeeze(from_slices(2, 1, {s0, s1}));
  Matrix expected(2, 2);
  expected << 1, 3, 2, 4;
  EXPECT_EQ(m, expected);

  Tensor3 tube(1, 1, 3);
  tube(0, 0, 0) = 5;
  tube(0, 0, 1) = 6;
  tube(0, 0, 2) = 7;
  Matrix row(1, 3);
  row << 5, 6, 7;
  EXPECT_EQ(squeeze(tube), row);
  EXPECT_THROW(squeeze(Tensor3(2, 2, 2)), InvalidArgument);
}

TEST(Squeeze, TwistIsInverse) {
  std::mt19937_64 gen(1);
  const Matrix m = oracle::random_matrix(gen, 3, 5);
  EXPECT_EQ(squeeze(twist(m)), m);
  const Tensor3 t = oracle::random_tensor(gen, 4, 1, 3);
  EXPECT_EQ(twist(squeeze(t)), t);
  EXPECT_EQ(twist(Matrix::Zero(2, 3)), Tensor3(2, 1, 3));

  Matrix m2(2, 2);
  m2 << 1, 3, 2, 4;
  const Tensor3 tw = twist(m2);
  EXPECT_EQ(tw(0, 0, 0), 1);
  EXPECT_EQ(tw(1, 0, 0), 2);
  EXPECT_EQ(tw(0, 0, 1), 3);
  EXPECT_EQ(tw(1, 0, 1), 4);
}

TEST(Unfold, StacksFrontalSlices) {
  const Matrix i2 = Matrix::Identity(2, 2);
  const Matrix u = unfold(from_slices(2, 2, {i2, 2 * i2}));
  Matrix expected(4, 2);
  expected << 1, 0, 0, 1, 2, 0, 0, 2;
  EXPECT_EQ(u, expected);

  std::mt19937_64 gen(2);
  const Tensor3 a = oracle::random_tensor(gen, 3, 4, 5);
  EXPECT_EQ(fold(unfold(a), 5), a);

  Tensor3 tube(1, 1, 3);
  tube(0, 0, 1) = 9;
  EXPECT_EQ(unfold(tube), (Eigen::Vector3d(0, 9, 0)));
  EXPECT_THROW(fold(Matrix::Zero(5, 2), 2), InvalidArgument);
}

TEST(Circ, TubeGivesColumnCirculant) {
  Tensor3 tube(1, 1, 3);
  tube(0, 0, 0) = 1;  // a
  tube(0, 0, 1) = 2;  // b
  tube(0, 0, 2) = 3;  // c
  Matrix expected(3, 3);
  expected << 1, 3, 2, 2, 1, 3, 3, 2, 1;
  EXPECT_EQ(circ(tube), expected);
}

TEST(Circ, OnlyFirstSliceGivesBlockDiagonal) {
  std::mt19937_64 gen(3);
  Tensor3 a(2, 3, 4);
  a.frontal(0) = oracle::random_matrix(gen, 2, 3);
  const Matrix c = circ(a);
  for (Index br = 0; br < 4; ++br)
    for (Index bc = 0; bc < 4; ++bc) {
      const Matrix blk = c.block(br * 2, bc * 3, 2, 3);
      if (br == bc)
        EXPECT_EQ(blk, Matrix(a.frontal(0)));
      else
        EXPECT_TRUE(blk.isZero(0));
    }
  EXPECT_EQ(circ(identity_tensor(2, 3)), Matrix::Identity(6, 6));
  EXPECT_EQ(circ(a), oracle::block_circulant(a));
}

TEST(IdentityTensor, Laws) {
  Tensor3 i21(2, 2, 1);
  i21.frontal(0).setIdentity();
  EXPECT_EQ(identity_tensor(2, 1), i21);
  const Tensor3 i = identity_tensor(3, 4);
  EXPECT_LE(oracle::rel_fro(tprod(i, i), i), 1e-15);
  EXPECT_THROW(identity_tensor(0, 2), InvalidArgument);

  std::mt19937_64 gen(4);
  const Tensor3 a = oracle::random_tensor(gen, 3, 4, 5);
  EXPECT_LE(fro_norm(tprod(identity_tensor(3, 5), a) - a), 1e-14 * fro_norm(a));
  EXPECT_LE(fro_norm(tprod(a, identity_tensor(4, 5)) - a), 1e-14 * fro_norm(a));
}

TEST(TTranspose, TubeReversesTail) {
  Tensor3 tube(1, 1, 3);
  tube(0, 0, 0) = 1;
  tube(0, 0, 1) = 2;
  tube(0, 0, 2) = 3;
  const Tensor3 t = ttranspose(tube);
  EXPECT_EQ(t(0, 0, 0), 1);
  EXPECT_EQ(t(0, 0, 1), 3);
  EXPECT_EQ(t(0, 0, 2), 2);
}

TEST(TTranspose, InvolutionAndProductRule) {
  std::mt19937_64 gen(5);
  const Tensor3 a = oracle::random_tensor(gen, 2, 3, 4);
  const Tensor3 b = oracle::random_tensor(gen, 3, 2, 4);
  EXPECT_EQ(ttranspose(ttranspose(a)), a);
  EXPECT_EQ(ttranspose(a), oracle::ttranspose_def(a));
  // (A*B)^T = B^T * A^T, both sides by the definition path
  const Tensor3 lhs = oracle::ttranspose_def(oracle::tprod_def(a, b));
  const Tensor3 rhs = oracle::tprod_def(oracle::ttranspose_def(b), oracle::ttranspose_def(a));
  EXPECT_LE(oracle::rel_fro(lhs, rhs), 1e-13);
  EXPECT_LE(oracle::rel_fro(ttranspose(tprod(a, b)), rhs), 1e-12);
}

TEST(Tprod, MatchesBlockCirculantDefinition) {
  std::mt19937_64 gen(6);
  const Tensor3 b = oracle::random_tensor(gen, 2, 2, 2);
  const Tensor3 c = oracle::random_tensor(gen, 2, 2, 2);
  EXPECT_LE(oracle::rel_fro(tprod(b, c), oracle::tprod_def(b, c)), 1e-12);
}

TEST(Tprod, RandomShapesAgainstDefinition) {
  std::mt19937_64 gen(7);
  std::uniform_int_distribution<Index> dim(1, 8);
  for (int trial = 0; trial < 100; ++trial) {
    const Index l = dim(gen), p = dim(gen), m = dim(gen), n = dim(gen);
    const Tensor3 b = oracle::random_tensor(gen, l, p, n);
    const Tensor3 c = oracle::random_tensor(gen, p, m, n);
    ASSERT_LE(oracle::rel_fro(tprod(b, c), oracle::tprod_def(b, c)), 1e-12)
        << "dims " << l << "," << p << "," << m << "," << n;
  }
}

TEST(Tprod, TubeFibersCommute) {
  std::mt19937_64 gen(8);
  const Tensor3 a = oracle::random_tensor(gen, 1, 1, 4);
  const Tensor3 b = oracle::random_tensor(gen, 1, 1, 4);
  EXPECT_LE(oracle::rel_fro(tprod(a, b), tprod(b, a)), 1e-14);
}

TEST(Tprod, Associative) {
  std::mt19937_64 gen(9);
  for (int trial = 0; trial < 20; ++trial) {
    const Tensor3 a = oracle::random_tensor(gen, 3, 4, 5);
    const Tensor3 b = oracle::random_tensor(gen, 4, 2, 5);
    const Tensor3 c = oracle::random_tensor(gen, 2, 3, 5);
    EXPECT_LE(oracle::rel_fro(tprod(tprod(a, b), c), tprod(a, tprod(b, c))), 1e-12);
  }
}

TEST(Tprod, RejectsMismatchedShapes) {
  EXPECT_THROW(tprod(Tensor3(2, 3, 4), Tensor3(2, 3, 4)), InvalidArgument);
  EXPECT_THROW(tprod(Tensor3(2, 3, 4), Tensor3(3, 3, 5)), InvalidArgument);
}

TEST(Fourier, ConjugateSymmetryAndRoundTrip) {
  std::mt19937_64 gen(10);
  for (Index n : {1, 2, 5, 6, 8}) {
    const Tensor3 a = oracle::random_tensor(gen, 3, 2, n);
    const FourierTensor3 fa = dft(a);
    for (Index k = 1; k < n; ++k)
      EXPECT_LE((fa[k] - fa[n - k].conjugate()).norm(), 1e-13 * fa[k].norm() + 1e-15);
    EXPECT_LE(oracle::rel_fro(idft(fa), a), 1e-13);
  }
}

TEST(Fourier, FullTransformMatchesDirectSum) {
  std::mt19937_64 gen(11);
  const Tensor3 a = oracle::random_tensor(gen, 2, 2, 7);
  const FourierTensor3 fa = dft(a);
  for (Index f = 0; f < 7; ++f)
    for (Index i = 0; i < 2; ++i)
      for (Index j = 0; j < 2; ++j) {
        Complex sum = 0;
        for (Index k = 0; k < 7; ++k)
          sum += a(i, j, k) * std::polar(1.0, -2.0 * std::numbers::pi * f * k / 7.0);
        EXPECT_LE(std::abs(sum - fa[f](i, j)), 1e-13);
      }
}

TEST(Fourier, ImaginaryResidueIsRejected) {
  FourierTensor3 bad(1, 1, 3);
  bad[0](0, 0) = Complex(1.0, 0.0);
  bad[1](0, 0) = Complex(0.0, 1.0);
  bad[2](0, 0) = Complex(0.0, 1.0);  // not the conjugate of slice 1
  EXPECT_THROW(idft(bad), NumericalError);
}

TEST(TsolveSpd, IdentityAndScaledIdentity) {
  std::mt19937_64 gen(12);
  const Tensor3 b = oracle::random_tensor(gen, 3, 2, 4);
  EXPECT_LE(oracle::rel_fro(tsolve_spd(identity_tensor(3, 4), b), b), 1e-15);
  EXPECT_LE(oracle::rel_fro(tsolve_spd(2.0 * identity_tensor(3, 4), b), 0.5 * b), 1e-15);
}

TEST(TsolveSpd, GramPlusRhoResidual) {
  std::mt19937_64 gen(13);
  const Tensor3 u = oracle::random_tensor(gen, 3, 2, 4);
  const Tensor3 a = oracle::tprod_def(oracle::ttranspose_def(u), u) + 0.5 * identity_tensor(2, 4);
  const Tensor3 b = oracle::random_tensor(gen, 2, 5, 4);
  const Tensor3 x = tsolve_spd(a, b);
  EXPECT_LE(oracle::rel_fro(oracle::tprod_def(a, x), b), 1e-10);
}

TEST(TsolveSpd, IndefiniteSliceReportsFrequency) {
  Tensor3 a = identity_tensor(2, 3);
  a(0, 0, 0) = -5.0;  // every Fourier slice gets a -5 + ... entry
  try {
    tsolve_spd(a, Tensor3(2, 1, 3, 1.0));
    FAIL() << "expected NumericalError";
  } catch (const NumericalError& e) {
    EXPECT_GE(e.frequency(), 0);
  }
}

TEST(Norms, Basics) {
  const auto n1 = norms(Tensor3(2, 2, 2, 1.0));
  EXPECT_DOUBLE_EQ(n1.fro, std::sqrt(8.0));
  EXPECT_DOUBLE_EQ(n1.sum, 8.0);
  EXPECT_DOUBLE_EQ(n1.max, 1.0);
  const auto n0 = norms(Tensor3(2, 3, 4));
  EXPECT_EQ(n0.fro, 0.0);
  EXPECT_EQ(n0.sum, 0.0);
  EXPECT_EQ(n0.max, 0.0);

  std::mt19937_64 gen(14);
  const Tensor3 a = oracle::random_tensor(gen, 3, 4, 5);
  double slices = 0;
  for (Index k = 0; k < 5; ++k) slices += a.frontal(k).squaredNorm();
  EXPECT_NEAR(norms(a).fro * norms(a).fro, slices, 1e-12);
}

TEST(ShiftedPrototypes, LateralSliceIsSumOfCirculantWeightedSlices) {
  std::mt19937_64 gen(15);
  for (int trial = 0; trial < 10; ++trial) {
    const Index p = 3, s = 4, t = 5, r = 6;
    const Tensor3 d = oracle::random_tensor(gen, p, s, r);
    const Tensor3 h = oracle::random_tensor(gen, s, t, r);
    const Tensor3 y = tprod(d, h);
    const Tensor3 ht = oracle::ttranspose_def(h);
    for (Index j = 0; j < t; ++j) {
      Matrix via_circ = Matrix::Zero(p, r);
      for (Index i = 0; i < s; ++i) via_circ += squeeze(d.lateral(i)) * oracle::circulant(ht.tube(j, i));
      const Matrix via_shift = oracle::shifted_prototype_slice(d, h, j);
      const Matrix yj = squeeze(y.lateral(j));
      EXPECT_LE((yj - via_circ).norm(), 1e-12 * yj.norm());
      EXPECT_LE((yj - via_shift).norm(), 1e-12 * yj.norm());
    }
  }
}

TEST(Tns, ByteLayout) {
  Tensor3 t(1, 2, 1);
  t(0, 0, 0) = 1.0;
  t(0, 1, 0) = -2.5;
  std::ostringstream os;
  write_tns(os, t);
  const std::string bytes = os.str();
  ASSERT_EQ(bytes.size(), 4u + 24u + 16u);
  EXPECT_EQ(bytes.substr(0, 4), "TNS1");
  EXPECT_EQ(static_cast<unsigned char>(bytes[4]), 1u);  // l, little endian
  EXPECT_EQ(static_cast<unsigned char>(bytes[12]), 2u);  // m
  EXPECT_EQ(static_cast<unsigned char>(bytes[20]), 1u);  // n
  double first;
  std::memcpy(&first, bytes.data() + 28, 8);
  EXPECT_EQ(first, 1.0);
}

TEST(Tns, RoundTripAndBadMagic) {
  std::mt19937_64 gen(16);
  const Tensor3 t = oracle::random_tensor(gen, 3, 4, 5);
  std::stringstream ss;
  write_tns(ss, t);
  EXPECT_EQ(read_tns(ss), t);
  std::stringstream bad("XXXX");
  EXPECT_THROW(read_tns(bad), InvalidArgument);
  std::stringstream truncated(std::string("TNS1\x01", 5));
  EXPECT_THROW(read_tns(truncated), InvalidArgument);
}
