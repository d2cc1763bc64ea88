#pragma once

#include <array>
#include <cmath>
#include <span>
#include <type_traits>
#include <vector>

#include <Eigen/Dense>
#include <unsupported/Eigen/KroneckerProduct>

#include "fence/controller.hpp"
#include "fence/model.hpp"

namespace fence
{

template<typename Scalar>
using Mat4T = Eigen::Matrix<Scalar, 4, 4>;

// Closed-loop matrices of the agent-centroid system, all in base (pre-Kronecker) form:
//   Phi' = A_c Phi + B_c sigma,  sigma' = S sigma,  e_bar = C_c Phi + D sigma.
template<typename Scalar>
struct ClosedLoopMatricesT
{
  Mat4T<Scalar>                A_c;
  Eigen::Matrix<Scalar, 4, 2> B_c;
  Eigen::Matrix<Scalar, 1, 4> C_c;
  Eigen::Matrix<Scalar, 1, 2> D;
  Mat2T<Scalar>                S;
};
using ClosedLoopMatrices = ClosedLoopMatricesT<double>;

template<typename Scalar>
ClosedLoopMatricesT<Scalar>
build_closed_loop( const GainsT<Scalar>& g, Scalar s1 )
{
  ClosedLoopMatricesT<Scalar> m;
  // clang-format off
  m.A_c << 0,       1,       0,       0,
           -g.k1(), -g.k2(), -g.k3(), -g.k4(),
           0,       0,       0,       1,
           1,       0,       s1,      0;
  m.B_c << 0, 0,
           0, 0,
           0, 0,
           -1, 0;
  // clang-format on
  m.C_c << 1, 0, 0, 0;
  m.D << -1, 0;
  m.S << 0, 1, s1, 0;
  return m;
}

// Monic characteristic polynomial of A_c, highest power first:
// [1, k2, k1 - s1, k4 - s1 k2, k3 - s1 k1].
template<typename Scalar>
Eigen::Matrix<Scalar, 5, 1>
characteristic_polynomial( const ClosedLoopMatricesT<Scalar>& m )
{
  const Scalar k1 = -m.A_c( 1, 0 ), k2 = -m.A_c( 1, 1 ), k3 = -m.A_c( 1, 2 ), k4 = -m.A_c( 1, 3 );
  const Scalar s1 = m.A_c( 3, 2 );
  Eigen::Matrix<Scalar, 5, 1> c;
  c << Scalar( 1 ), k2, k1 - s1, k4 - s1 * k2, k3 - s1 * k1;
  return c;
}

// Routh stability test for a monic polynomial (coefficients highest power first).
// Returns true iff every first-column entry of the Routh table is positive.
// Throws DegenerateRouthTable when a pivot is exactly zero.
template<typename Derived>
bool
routh_hurwitz( const Eigen::MatrixBase<Derived>& coeffs )
{
  using Scalar = typename Derived::Scalar;
  const Eigen::Index n = coeffs.size();
  if( n < 1 || coeffs( 0 ) != Scalar( 1 ) )
    throw ValidationError( "routh_hurwitz expects a monic polynomial" );
  if( n == 1 )
    return true;

  const Eigen::Index width = ( n + 1 ) / 2;
  std::vector<std::vector<Scalar>> table( static_cast<std::size_t>( n ), std::vector<Scalar>( width + 1, Scalar( 0 ) ) );
  for( Eigen::Index j = 0; j < n; ++j )
    table[static_cast<std::size_t>( j % 2 )][static_cast<std::size_t>( j / 2 )] = coeffs( j );

  for( std::size_t row = 2; row < table.size(); ++row )
  {
    const auto& above = table[row - 1];
    const auto& above2 = table[row - 2];
    if( above[0] == Scalar( 0 ) )
      throw DegenerateRouthTable( "zero pivot in Routh table row " + std::to_string( row - 1 ) );
    for( std::size_t j = 0; j + 1 < table[row].size(); ++j )
      table[row][j] = ( above[0] * above2[j + 1] - above2[0] * above[j + 1] ) / above[0];
  }
  for( const auto& row : table )
    if( !( row[0] > Scalar( 0 ) ) )
      return false;
  return true;
}

template<typename Derived>
bool
hurwitz_by_eigenvalues( const Eigen::MatrixBase<Derived>& a )
{
  using Scalar = typename Derived::Scalar;
  Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic> dense = a;
  Eigen::EigenSolver<decltype( dense )> solver( dense, false );
  if( solver.info() != Eigen::Success )
    throw SingularSystem( "eigenvalue computation did not converge" );
  return solver.eigenvalues().real().maxCoeff() < Scalar( 0 );
}

// Routh verdict, falling back to the eigenvalue test on a degenerate table.
template<typename Scalar>
bool
is_hurwitz( const ClosedLoopMatricesT<Scalar>& m )
{
  try
  {
    return routh_hurwitz( characteristic_polynomial( m ) );
  }
  catch( const DegenerateRouthTable& )
  {
    return hurwitz_by_eigenvalues( m.A_c );
  }
}

template<typename Scalar>
struct RegulatorSolutionT
{
  Eigen::Matrix<Scalar, 4, 2> X_c;
  Scalar                      sylvester_residual = 0;
  Scalar                      output_residual    = 0;
};
using RegulatorSolution = RegulatorSolutionT<double>;

inline constexpr double regulator_residual_tolerance = 1e-9;

// Solves X_c S = A_c X_c + B_c by vectorization:
//   (I2 (x) A_c - S^T (x) I4) vec(X_c) = -vec(B_c).
template<typename Scalar>
RegulatorSolutionT<Scalar>
solve_regulator_equation( const ClosedLoopMatricesT<Scalar>& m )
{
  if( !is_hurwitz( m ) )
    throw NotHurwitz( "A_c is not Hurwitz; regulator equation has no guaranteed unique solution" );

  using Mat8 = Eigen::Matrix<Scalar, 8, 8>;
  const Mat8 lhs = Mat8( Eigen::kroneckerProduct( Mat2T<Scalar>::Identity(), m.A_c ) )
                   - Mat8( Eigen::kroneckerProduct( m.S.transpose(), Mat4T<Scalar>::Identity() ) );
  const Eigen::Matrix<Scalar, 8, 1> rhs = -m.B_c.reshaped();

  Eigen::FullPivLU<Mat8> lu( lhs );
  if( !lu.isInvertible() )
    throw SingularSystem( "vectorized Sylvester system is rank deficient" );

  RegulatorSolutionT<Scalar> sol;
  sol.X_c                = lu.solve( rhs ).reshaped( 4, 2 );
  sol.sylvester_residual = ( sol.X_c * m.S - m.A_c * sol.X_c - m.B_c ).norm();
  sol.output_residual    = ( m.C_c * sol.X_c + m.D ).norm();
  if( !( sol.sylvester_residual < Scalar( regulator_residual_tolerance ) )
      || !( sol.output_residual < Scalar( regulator_residual_tolerance ) ) )
    throw SingularSystem( "regulator equation residuals exceed tolerance" );
  return sol;
}

template<typename Scalar>
struct LyapunovDataT
{
  Mat4T<Scalar>         P;     // base form; the full matrix is P (x) I2
  Scalar                gamma; // p2 - p4
  std::array<Scalar, 7> p;     // p1..p7
};
using LyapunovData = LyapunovDataT<double>;

// Lyapunov matrix that cancels the repulsion cross terms; p5 = p6 = 0.
template<typename Scalar>
LyapunovDataT<Scalar>
build_P( const GainsT<Scalar>& g, Scalar s1, Scalar p4 = Scalar( 1 ) )
{
  if( !( p4 > Scalar( 0 ) ) )
    throw ValidationError( "p4 must be positive" );
  const Scalar k1 = g.k1(), k3 = g.k3();
  if( !( k1 - k3 + s1 - Scalar( 1 ) > Scalar( 0 ) ) )
    throw C2Violated( "k1 - k3 + s1 - 1 must be positive for P to be positive definite" );

  LyapunovDataT<Scalar> out;
  const Scalar p1 = ( k1 * k1 + ( s1 - Scalar( 1 ) ) * k1 - k3 ) / k3 * p4;
  const Scalar p2 = ( k1 + s1 - Scalar( 1 ) ) / k3 * p4;
  const Scalar p3 = ( k3 - s1 ) * p4;
  const Scalar p7 = ( k1 - Scalar( 1 ) ) * p4;
  out.p = { p1, p2, p3, p4, Scalar( 0 ), Scalar( 0 ), p7 };
  // clang-format off
  out.P << p1, 0,  p7, 0,
           0,  p2, 0,  p4,
           p7, 0,  p3, 0,
           0,  p4, 0,  p4;
  // clang-format on
  out.gamma = p2 - p4;
  return out;
}

// Sylvester's criterion: all leading principal minors positive.
template<typename Derived>
bool
is_positive_definite( const Eigen::MatrixBase<Derived>& m )
{
  using Scalar = typename Derived::Scalar;
  using std::abs;
  if( m.rows() != m.cols() )
    throw NotSymmetric( "matrix is not square" );
  const Scalar scale = std::max( Scalar( 1 ), m.cwiseAbs().maxCoeff() );
  if( ( m - m.transpose() ).cwiseAbs().maxCoeff() > Scalar( 1e-12 ) * scale )
    throw NotSymmetric( "matrix is not symmetric" );
  for( Eigen::Index k = 1; k <= m.rows(); ++k )
  {
    Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic> lead = m.topLeftCorner( k, k );
    if( !( lead.determinant() > Scalar( 0 ) ) )
      return false;
  }
  return true;
}

namespace detail
{

// Phi_i - (X_c (x) I2) sigma for every agent.
template<typename Scalar>
std::vector<Eigen::Matrix<Scalar, 8, 1>>
regulation_errors( std::span<const AgentStateT<Scalar>> agents, const TargetStateT<Scalar>& target,
                   const RegulatorSolutionT<Scalar>& reg )
{
  const Eigen::Matrix<Scalar, 8, 1> steady = kron_i2( reg.X_c ) * target.sigma();
  std::vector<Eigen::Matrix<Scalar, 8, 1>> out;
  out.reserve( agents.size() );
  for( const auto& a : agents )
    out.push_back( a.stacked() - steady );
  return out;
}

template<typename Scalar>
std::vector<Vec2T<Scalar>>
positions_of( std::span<const AgentStateT<Scalar>> agents )
{
  std::vector<Vec2T<Scalar>> pos;
  pos.reserve( agents.size() );
  for( const auto& a : agents )
    pos.push_back( a.x );
  return pos;
}

} // namespace detail

// Sum over ordered neighbor pairs of the integral of alpha from |x_ik| to R.
template<typename Scalar>
Scalar
repulsion_potential( std::type_identity_t<std::span<const Vec2T<Scalar>>> positions, const PotentialParamsT<Scalar>& pp )
{
  const auto order = canonical_order<Scalar>( positions );
  Scalar     vp    = 0;
  for( std::size_t i : order )
    for( std::size_t k : order )
    {
      if( i == k )
        continue;
      const Scalar d = ( positions[i] - positions[k] ).norm();
      if( d <= pp.R() )
        vp += alpha_integral( d, pp );
    }
  return vp;
}

// V1 = sum_i Phi~_i^T (P (x) I2) Phi~_i + gamma k5 V_p.
template<typename Scalar>
Scalar
lyapunov_value( std::type_identity_t<std::span<const AgentStateT<Scalar>>> agents, const TargetStateT<Scalar>& target,
                const RegulatorSolutionT<Scalar>& reg, const LyapunovDataT<Scalar>& lyap, Scalar k5,
                const PotentialParamsT<Scalar>& pp )
{
  const auto pos   = detail::positions_of( agents );
  const auto order = canonical_order<Scalar>( pos );
  const auto err   = detail::regulation_errors( agents, target, reg );
  const Eigen::Matrix<Scalar, 8, 8> p_full = kron_i2( lyap.P );

  Scalar quad = 0;
  for( std::size_t i : order )
    quad += err[i].dot( p_full * err[i] );
  return quad + lyap.gamma * k5 * repulsion_potential<Scalar>( pos, pp );
}

// dV1/dt = -sum_i (2 p4 / k4) |k2 v~_i + k4 zeta~_i|^2, valid under C2.
template<typename Scalar>
Scalar
lyapunov_rate( std::type_identity_t<std::span<const AgentStateT<Scalar>>> agents, const TargetStateT<Scalar>& target,
               const RegulatorSolutionT<Scalar>& reg, const GainsT<Scalar>& g, Scalar p4 = Scalar( 1 ) )
{
  if( !check_gains( g, target.s1() ).c2_holds )
    throw C2Violated( "closed-form Lyapunov rate requires condition C2" );
  const auto pos   = detail::positions_of( agents );
  const auto order = canonical_order<Scalar>( pos );
  const auto err   = detail::regulation_errors( agents, target, reg );

  Scalar rate = 0;
  for( std::size_t i : order )
  {
    const Vec2T<Scalar> mix = g.k2() * err[i].template segment<2>( 2 ) + g.k4() * err[i].template segment<2>( 6 );
    rate -= Scalar( 2 ) * p4 / g.k4() * mix.squaredNorm();
  }
  return rate;
}

} // namespace fence
