use trike_core::lti::TransferFunction;
use trike_core::pid::{closed_loop_step, design, design_pid, verify_design, Crossover, DesignSpec};

fn plant() -> TransferFunction {
    TransferFunction::new(&[1.0, 2.8], &[1.0, 5.44, 2.2], 0.3).unwrap()
}

fn close(a: f64, b: f64, rel: f64) -> bool {
    (a - b).abs() <= rel * b.abs().max(1e-300)
}

#[test]
fn continuous_plant_at_heuristic_crossover() {
    let theta = 5f64.to_radians();
    let gains = design_pid(&plant(), 3.6, theta, 0.5).unwrap();
    assert!(close(plant().freq_response(3.6).unwrap().norm(), 0.204_101_525_233_006_99, 1e-12));
    assert!(close(gains.kp, 4.880_878_263_670_332, 1e-12));
    assert!(close(gains.kd, 0.157_197_334_725_038_52, 1e-12));
    let report = verify_design(&plant(), &gains, 3.6).unwrap();
    assert!((report.controller_phase - 0.087_266_462_599_716_48).abs() < 1e-8);
    assert!((report.loop_gain - 1.0).abs() < 1e-8);
}

#[test]
fn default_design_matches_rise_time() {
    let d = design(&plant(), 0.05, &DesignSpec::default()).unwrap();
    assert!(close(d.omega, 1.786_348_680_544_200_6, 1e-9), "omega {}", d.omega);
    assert!(close(d.gains.kp, 2.926_490_307_872_076_5, 1e-9));
    assert!(close(d.gains.ki, 0.261_386_605_004_633_73, 1e-9));
    assert!(close(d.gains.kd, -0.061_415_899_179_476_784, 1e-9));
    assert_eq!(d.w_plane.order(), 8);
}

#[test]
fn heuristic_rule_with_printed_sign_is_too_aggressive() {
    let spec = DesignSpec {
        theta: 5f64.to_radians(),
        crossover: Crossover::Heuristic,
        ..DesignSpec::default()
    };
    let d = design(&plant(), 0.05, &spec).unwrap();
    assert_eq!(d.omega, 3.6);
    assert!(close(d.gains.kp, 4.861_853_200_319_671, 1e-9));
}

#[test]
fn default_closed_loop_trace() {
    let d = design(&plant(), 0.05, &DesignSpec::default()).unwrap();
    let y = closed_loop_step(&plant(), &d.gains, 0.05, 1201).unwrap();
    let head = [
        0.0, 0.0, 0.0, 0.0, 0.0, 0.0, 0.0,
        0.08001622527776255, 0.20930347139029093, 0.32545514920498403, 0.43112043409983336,
        0.5283680851819093, 0.6188147115088514, 0.7037246685643116, 0.7776852639877735,
        0.8335875828001308, 0.8717154929600721, 0.8955210416121361, 0.9075903317219761,
        0.9098649713898559, 0.9038077004260715, 0.8910383726543009, 0.8738602099259064,
        0.8547124325841442, 0.835498191722883, 0.8175508186338295, 0.8018111820158544,
        0.7889521114348608, 0.7794240305338074, 0.7734137658529189,
    ];
    for (k, want) in head.iter().enumerate() {
        assert!((y[k] - want).abs() < 1e-9, "y[{k}] = {} vs {want}", y[k]);
    }
    let later = [
        (40, 0.8312493868539425), (60, 0.8456748941787456), (100, 0.8698803001507887),
        (200, 0.9096752186263013), (400, 0.9564913789858082), (1000, 0.9951372657628911),
    ];
    for (k, want) in later {
        assert!((y[k] - want).abs() < 1e-9, "y[{k}] = {} vs {want}", y[k]);
    }
}
