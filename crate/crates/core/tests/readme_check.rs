//! Keeps the library example in README.md honest: same imports, same calls.

use psdp::instance::{gen_identity, Instance};
use psdp::solver::{solve, Certificate, SolverParams};
use psdp::verify::{verify_certificate, Verdict};

#[test]
fn readme_library_example_compiles_and_certifies() -> Result<(), Box<dyn std::error::Error>> {
    let inst = gen_identity(4, 6);
    let params = SolverParams::for_instance(&inst, 0.1)?;
    let result = solve(&inst, &params)?;
    let cert = Certificate::from_result(&result, &params, false);
    let report = verify_certificate(&Instance::Special(inst), &cert)?;
    assert_eq!(report.verdict, Verdict::Certified);
    Ok(())
}
