#include "fence/commands.hpp"

#include <algorithm>
#include <cstdlib>
#include <fstream>
#include <ostream>
#include <sstream>
#include <string>

#include <CLI11.hpp>

#include "fence/analysis.hpp"
#include "fence/csv.hpp"

namespace fence
{

namespace
{

std::string
opt_str( const std::optional<double>& v )
{
  return v ? format_number( *v ) : std::string( "none" );
}

template<typename Derived>
std::string
matrix_str( const Eigen::MatrixBase<Derived>& m )
{
  std::string s = "[";
  for( Eigen::Index i = 0; i < m.rows(); ++i )
  {
    s += i ? ",[" : "[";
    for( Eigen::Index j = 0; j < m.cols(); ++j )
      s += ( j ? "," : "" ) + format_number( m( i, j ) );
    s += "]";
  }
  return s + "]";
}

void
write_file( const std::filesystem::path& path, auto&& writer )
{
  std::ofstream f( path );
  if( !f )
    throw ValidationError( "cannot write " + path.string() );
  writer( f );
}

void
print_metrics( std::ostream& out, const std::string& prefix, const MetricsReport& m )
{
  out << prefix << "fencing_converged_at=" << opt_str( m.fencing_converged_at ) << '\n'
      << prefix << "velocity_converged_at=" << opt_str( m.velocity_converged_at ) << '\n'
      << prefix << "min_distance_overall=" << format_number( m.min_distance_overall ) << '\n'
      << prefix << "collision=" << ( m.collision ? "true" : "false" ) << '\n'
      << prefix << "hull_contains_target_from=" << opt_str( m.hull_contains_target_from ) << '\n'
      << prefix << "peak_pairwise_oscillation=" << format_number( m.peak_pairwise_oscillation ) << '\n';
}

struct RunOutcome
{
  TrajectoryLog log;
  ExitCode      code = ExitCode::success;
};

// Runs one scenario; simulation errors keep the partial log and map to exit codes.
RunOutcome
simulate( const Scenario& sc, std::ostream& err )
{
  try
  {
    return { run( sc ), ExitCode::success };
  }
  catch( const CollisionDetected& e )
  {
    err << "error: " << e.what() << '\n';
    return { e.partial_log(), ExitCode::collision };
  }
  catch( const Diverged& e )
  {
    err << "error: " << e.what() << '\n';
    return { e.partial_log(), ExitCode::divergence };
  }
}

void
warn_if_c2_fails( const RunConfig& cfg, std::ostream& err )
{
  try
  {
    if( !check_gains( Gains( cfg.k1, cfg.k2, cfg.k3, cfg.k4, cfg.k5 ), cfg.s1 ).c2_holds )
      err << "warning: gains violate condition C2; collision avoidance and velocity matching are not guaranteed\n";
  }
  catch( const DegenerateGains& )
  {
  }
}

} // namespace

ComparisonSummary
summarize_comparison( const TrajectoryLog& label_free, const TrajectoryLog& label_fixed,
                      const MetricThresholds& thresholds )
{
  ComparisonSummary s;
  s.label_free        = metrics( label_free, thresholds );
  s.label_fixed       = metrics( label_fixed, thresholds );
  s.oscillation_ratio = s.label_fixed.peak_pairwise_oscillation / s.label_free.peak_pairwise_oscillation;
  if( s.label_free.fencing_converged_at && s.label_fixed.fencing_converged_at )
    s.convergence_time_difference = *s.label_fixed.fencing_converged_at - *s.label_free.fencing_converged_at;
  return s;
}

ExitCode
command_run( const RunConfig& cfg, const std::filesystem::path& out_dir, std::ostream& out, std::ostream& err )
{
  const Scenario sc = to_scenario( cfg );
  warn_if_c2_fails( cfg, err );
  std::filesystem::create_directories( out_dir );

  auto outcome = simulate( sc, err );
  write_file( out_dir / "trajectory.csv", [&]( std::ostream& f ) { write_trajectory_csv( f, outcome.log ); } );
  if( !outcome.log.snapshots.empty() )
  {
    const auto m = metrics( outcome.log );
    write_file( out_dir / "metrics.csv", [&]( std::ostream& f ) { write_metrics_csv( f, m ); } );
    print_metrics( out, "", m );
  }
  out << "rows=" << outcome.log.snapshots.size() << '\n';
  return outcome.code;
}

ExitCode
command_check_gains( const RunConfig& cfg, std::ostream& out, std::ostream& err )
{
  GainReport rep;
  try
  {
    rep = check_gains( Gains( cfg.k1, cfg.k2, cfg.k3, cfg.k4, cfg.k5 ), cfg.s1 );
  }
  catch( const DegenerateGains& e )
  {
    err << "DegenerateGains: " << e.what() << '\n';
    return ExitCode::validation;
  }
  out << "c2_equality_residual=" << format_number( rep.c2_equality_residual ) << '\n'
      << "c2_inequality=" << format_number( rep.c2_inequality ) << '\n'
      << "fencing_lhs1=" << format_number( rep.fencing_lhs1 ) << '\n'
      << "fencing_lhs2=" << format_number( rep.fencing_lhs2 ) << '\n'
      << "c2_holds=" << ( rep.c2_holds ? "true" : "false" ) << '\n'
      << "fencing_holds=" << ( rep.fencing_holds ? "true" : "false" ) << '\n';
  return rep.fencing_holds ? ExitCode::success : ExitCode::failure;
}

ExitCode
command_verify( const RunConfig& cfg, std::ostream& out, std::ostream& err )
{
  const Gains g( cfg.k1, cfg.k2, cfg.k3, cfg.k4, cfg.k5 );
  const auto  m      = build_closed_loop( g, cfg.s1 );
  const auto  coeffs = characteristic_polynomial( m );

  out << "characteristic_polynomial=" << matrix_str( coeffs.transpose() ) << '\n';
  try
  {
    out << "routh_hurwitz=" << ( routh_hurwitz( coeffs ) ? "true" : "false" ) << '\n';
  }
  catch( const DegenerateRouthTable& e )
  {
    out << "routh_hurwitz=inconclusive\n";
  }
  Eigen::EigenSolver<Eigen::Matrix4d> eig( m.A_c, false );
  out << "eigenvalue_hurwitz=" << ( hurwitz_by_eigenvalues( m.A_c ) ? "true" : "false" ) << '\n'
      << "max_eigenvalue_real_part=" << format_number( eig.eigenvalues().real().maxCoeff() ) << '\n';

  ExitCode code = ExitCode::success;
  try
  {
    const auto reg = solve_regulator_equation( m );
    out << "sylvester_residual=" << format_number( reg.sylvester_residual ) << '\n'
        << "output_residual=" << format_number( reg.output_residual ) << '\n'
        << "X_c=" << matrix_str( reg.X_c ) << '\n';
  }
  catch( const Error& e )
  {
    out << "regulator=unavailable\n";
    err << "regulator equation: " << e.what() << '\n';
    code = ExitCode::failure;
  }

  try
  {
    const auto lyap = build_P( g, cfg.s1 );
    out << "P=" << matrix_str( lyap.P ) << '\n'
        << "gamma=" << format_number( lyap.gamma ) << '\n'
        << "P_positive_definite=" << ( is_positive_definite( lyap.P ) ? "true" : "false" ) << '\n';
  }
  catch( const C2Violated& e )
  {
    out << "P=unavailable\n";
    err << "Lyapunov matrix: " << e.what() << '\n';
  }
  const auto rep = check_gains( g, cfg.s1 );
  out << "c2_holds=" << ( rep.c2_holds ? "true" : "false" ) << '\n';
  return code;
}

ExitCode
command_compare( const RunConfig& cfg, const std::filesystem::path& out_dir, std::ostream& out, std::ostream& err )
{
  RunConfig free_cfg   = cfg;
  free_cfg.controller  = ControllerKind::label_free;
  RunConfig fixed_cfg  = cfg;
  fixed_cfg.controller = ControllerKind::label_fixed;
  const Scenario free_sc  = to_scenario( free_cfg );
  const Scenario fixed_sc = to_scenario( fixed_cfg );
  warn_if_c2_fails( cfg, err );
  std::filesystem::create_directories( out_dir );

  auto free_run  = simulate( free_sc, err );
  auto fixed_run = simulate( fixed_sc, err );
  write_file( out_dir / "trajectory_label_free.csv",
              [&]( std::ostream& f ) { write_trajectory_csv( f, free_run.log ); } );
  write_file( out_dir / "trajectory_label_fixed.csv",
              [&]( std::ostream& f ) { write_trajectory_csv( f, fixed_run.log ); } );
  if( free_run.code != ExitCode::success )
    return free_run.code;
  if( fixed_run.code != ExitCode::success )
    return fixed_run.code;

  const auto summary = summarize_comparison( free_run.log, fixed_run.log );
  std::ostringstream report;
  print_metrics( report, "label_free.", summary.label_free );
  print_metrics( report, "label_fixed.", summary.label_fixed );
  report << "oscillation_ratio=" << format_number( summary.oscillation_ratio ) << '\n'
         << "convergence_time_difference=" << opt_str( summary.convergence_time_difference ) << '\n';
  out << report.str();
  write_file( out_dir / "comparison.csv", [&]( std::ostream& f ) {
    std::string csv = "metric,value\n" + report.str();
    std::replace( csv.begin(), csv.end(), '=', ',' );
    f << csv;
  } );
  return ExitCode::success;
}

int
fence_sim_main( int argc, char** argv, std::ostream& out, std::ostream& err )
{
  CLI::App app{ "Label-free moving-target fencing simulator" };
  app.require_subcommand( 1 );
  std::string config_path;
  std::string out_dir;

  struct Sub
  {
    CLI::App*   app;
    const char* name;
  };
  std::vector<Sub> subs;
  for( const char* name : { "run", "check-gains", "verify", "compare" } )
  {
    CLI::App* sub = app.add_subcommand( name );
    sub->add_option( "config", config_path, "flat key = value configuration file" )->required();
    sub->add_option( "--out", out_dir, "output directory (overrides the config's out key)" );
    subs.push_back( { sub, name } );
  }
  subs[0].app->description( "integrate a scenario and write trajectory.csv / metrics.csv" );
  subs[1].app->description( "evaluate condition C2 and the fencing gain inequalities" );
  subs[2].app->description( "closed-loop stability, regulator equation and Lyapunov matrix report" );
  subs[3].app->description( "run label-free and label-fixed controllers from the same start" );

  try
  {
    app.parse( argc, argv );
  }
  catch( const CLI::ParseError& e )
  {
    const int rc = app.exit( e, out, err );
    return rc == 0 ? 0 : static_cast<int>( ExitCode::parse );
  }

  try
  {
    RunConfig cfg = parse_config( config_path );
    if( const char* stride = std::getenv( "FENCE_SIM_LOG_STRIDE" ) )
    {
      const long v = std::strtol( stride, nullptr, 10 );
      if( v <= 0 )
        throw ValidationError( "FENCE_SIM_LOG_STRIDE must be a positive integer" );
      cfg.log_stride = static_cast<std::size_t>( v );
    }
    const std::filesystem::path dir = out_dir.empty() ? cfg.out : out_dir;

    ExitCode code = ExitCode::success;
    if( subs[0].app->parsed() )
      code = command_run( cfg, dir, out, err );
    else if( subs[1].app->parsed() )
      code = command_check_gains( cfg, out, err );
    else if( subs[2].app->parsed() )
      code = command_verify( cfg, out, err );
    else
      code = command_compare( cfg, dir, out, err );
    return static_cast<int>( code );
  }
  catch( const ParseError& e )
  {
    err << "ParseError: " << e.what() << '\n';
    return static_cast<int>( ExitCode::parse );
  }
  catch( const ValidationError& e )
  {
    err << "ValidationError: " << e.what() << '\n';
    return static_cast<int>( ExitCode::validation );
  }
  catch( const std::exception& e )
  {
    err << "error: " << e.what() << '\n';
    return static_cast<int>( ExitCode::failure );
  }
}

} // namespace fence
