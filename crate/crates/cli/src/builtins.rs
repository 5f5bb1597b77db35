//! Built-in scenarios.

use signed_consensus::dynamics::Nonlinearity;
use signed_consensus::signed_graph::SegmentFile;

use crate::scenario::{GainFile, NonlinearityFile, ProtocolName, ScenarioFile};

pub struct Builtin {
    pub name: &'static str,
    pub about: &'static str,
    pub params: &'static [(&'static str, f64)],
    build: fn(&[(&str, f64)]) -> ScenarioFile,
}

impl Builtin {
    /// Applies `key=value` overrides to the defaults and builds the file.
    pub fn scenario(&self, overrides: &[(String, f64)]) -> Result<ScenarioFile, String> {
        let mut params: Vec<(&str, f64)> = self.params.to_vec();
        for (key, value) in overrides {
            match params.iter_mut().find(|(k, _)| k == key) {
                Some(slot) => slot.1 = *value,
                None => {
                    return Err(format!("{}: unknown parameter {key:?}", self.name));
                }
            }
        }
        Ok((self.build)(&params))
    }
}

fn param(params: &[(&str, f64)], key: &str) -> f64 {
    params.iter().find(|(k, _)| *k == key).expect("declared parameter").1
}

fn constant(n: usize, matrix: Vec<Vec<f64>>, x0: Vec<f64>) -> ScenarioFile {
    ScenarioFile {
        n,
        segments: vec![SegmentFile { t_start: 0.0, t_end: 1.0, matrix }],
        period: None,
        labels: None,
        x0,
        protocol: ProtocolName::Linear,
        nonlinearity: None,
        gain: None,
        t_end: None,
        integrator: None,
        classifier: None,
    }
}

fn example1(p: &[(&str, f64)]) -> ScenarioFile {
    let m = vec![
        vec![0.0, -1.0, 0.0],
        vec![-1.0, 0.0, 0.0],
        vec![param(p, "a31"), param(p, "a32"), 0.0],
    ];
    ScenarioFile {
        t_end: Some(30.0),
        ..constant(3, m, vec![1.0, -1.0, 0.3])
    }
}

fn example2(_: &[(&str, f64)]) -> ScenarioFile {
    // T0 = ln 3: on the first half-period x3' = 1 - x3, and starting from
    // -1/2 the solution 1 - (3/2) e^{-t} reaches 1/2 exactly at t = ln 3;
    // the second half mirrors it back to -1/2.
    let t0 = 3f64.ln();
    let pair = |a31: f64, a32: f64| {
        vec![
            vec![0.0, -1.0, 0.0],
            vec![-1.0, 0.0, 0.0],
            vec![a31, a32, 0.0],
        ]
    };
    ScenarioFile {
        segments: vec![
            SegmentFile { t_start: 0.0, t_end: t0, matrix: pair(1.0, 0.0) },
            SegmentFile { t_start: t0, t_end: 2.0 * t0, matrix: pair(0.0, 1.0) },
        ],
        period: Some(2.0 * t0),
        t_end: Some(100.0),
        ..constant(3, Vec::new(), vec![1.0, -1.0, -0.5])
    }
}

fn antagonistic_pair(_: &[(&str, f64)]) -> ScenarioFile {
    ScenarioFile {
        t_end: Some(30.0),
        ..constant(2, vec![vec![0.0, -1.0], vec![-1.0, 0.0]], vec![1.0, 0.0])
    }
}

fn chain3(_: &[(&str, f64)]) -> ScenarioFile {
    let m = vec![
        vec![0.0, -1.0, 0.0],
        vec![-1.0, 0.0, 1.0],
        vec![0.0, 1.0, 0.0],
    ];
    constant(3, m, vec![0.3, -0.7, 1.1])
}

fn unbalanced_cycle(_: &[(&str, f64)]) -> ScenarioFile {
    let m = vec![
        vec![0.0, 1.0, 0.0],
        vec![0.0, 0.0, 1.0],
        vec![-1.0, 0.0, 0.0],
    ];
    constant(3, m, vec![1.0, 0.5, -0.2])
}

fn zero_graph(_: &[(&str, f64)]) -> ScenarioFile {
    ScenarioFile {
        t_end: Some(10.0),
        ..constant(3, vec![vec![0.0; 3]; 3], vec![0.5, -0.2, 0.1])
    }
}

fn alternating_digon(_: &[(&str, f64)]) -> ScenarioFile {
    ScenarioFile {
        segments: vec![
            SegmentFile { t_start: 0.0, t_end: 1.0, matrix: vec![vec![0.0, 1.0], vec![1.0, 0.0]] },
            SegmentFile { t_start: 1.0, t_end: 2.0, matrix: vec![vec![0.0, -1.0], vec![1.0, 0.0]] },
        ],
        period: Some(2.0),
        t_end: Some(100.0),
        ..constant(2, Vec::new(), vec![0.8, -0.3])
    }
}

fn camp_switching(protocol: ProtocolName) -> ScenarioFile {
    // camps {1,2} | {3,4}; each half-period couples only part of the graph
    let a = vec![
        vec![0.0, 1.0, 0.0, 0.0],
        vec![1.0, 0.0, -1.0, 0.0],
        vec![0.0, -1.0, 0.0, 0.0],
        vec![0.0, 0.0, 0.0, 0.0],
    ];
    let b = vec![
        vec![0.0, 0.0, 0.0, -1.0],
        vec![0.0, 0.0, 0.0, 0.0],
        vec![0.0, 0.0, 0.0, 1.0],
        vec![-1.0, 0.0, 1.0, 0.0],
    ];
    ScenarioFile {
        segments: vec![
            SegmentFile { t_start: 0.0, t_end: 1.0, matrix: a },
            SegmentFile { t_start: 1.0, t_end: 2.0, matrix: b },
        ],
        period: Some(2.0),
        protocol,
        nonlinearity: Some(NonlinearityFile {
            default: Nonlinearity::CubicLinear { beta: 1.0 },
            overrides: Vec::new(),
        }),
        t_end: Some(100.0),
        ..constant(4, Vec::new(), vec![0.9, -0.4, 0.6, -0.8])
    }
}

fn nonlinear_cubic(_: &[(&str, f64)]) -> ScenarioFile {
    camp_switching(ProtocolName::NonlinearAdditiveNode)
}

fn nonlinear_cubic_edge(_: &[(&str, f64)]) -> ScenarioFile {
    camp_switching(ProtocolName::NonlinearAdditiveEdge)
}

fn gain_flow_sin2(_: &[(&str, f64)]) -> ScenarioFile {
    let support = vec![
        vec![0.0, 0.0, 0.0, 1.0],
        vec![1.0, 0.0, 0.0, 0.0],
        vec![0.0, 1.0, 0.0, 1.0],
        vec![0.0, 0.0, 1.0, 0.0],
    ];
    ScenarioFile {
        protocol: ProtocolName::GainFlow,
        gain: Some(GainFile::SinSquared),
        t_end: Some(100.0),
        ..constant(4, support, vec![0.9, -0.4, 0.6, -0.8])
    }
}

pub const BUILTINS: &[Builtin] = &[
    Builtin {
        name: "example1",
        about: "antagonistic pair followed by a third agent; no modulus consensus",
        params: &[("a31", 1.0), ("a32", 1.0)],
        build: example1,
    },
    Builtin {
        name: "example2",
        about: "periodic switching, balanced and QSC at every instant; no modulus consensus",
        params: &[],
        build: example2,
    },
    Builtin {
        name: "antagonistic-pair",
        about: "two mutually hostile agents; polarization",
        params: &[],
        build: antagonistic_pair,
    },
    Builtin {
        name: "chain3",
        about: "hostile pair with a friendly third agent; polarization {1}|{2,3}",
        params: &[],
        build: chain3,
    },
    Builtin {
        name: "unbalanced-cycle",
        about: "directed 3-cycle with one hostile arc; stabilizing",
        params: &[],
        build: unbalanced_cycle,
    },
    Builtin {
        name: "zero-graph",
        about: "no interactions at all",
        params: &[],
        build: zero_graph,
    },
    Builtin {
        name: "alternating-digon",
        about: "reciprocal arc whose sign alternates each period; stabilizing",
        params: &[],
        build: alternating_digon,
    },
    Builtin {
        name: "nonlinear-cubic",
        about: "h(x) = x + x^3, node-evaluated, on a switching schedule with fixed camps",
        params: &[],
        build: nonlinear_cubic,
    },
    Builtin {
        name: "nonlinear-cubic-edge",
        about: "as nonlinear-cubic with the edge-evaluated protocol",
        params: &[],
        build: nonlinear_cubic_edge,
    },
    Builtin {
        name: "gain-flow-sin2",
        about: "gains 1 + sin^2(x_i - x_j) on a strongly connected positive support",
        params: &[],
        build: gain_flow_sin2,
    },
];

pub fn find(name: &str) -> Option<&'static Builtin> {
    BUILTINS.iter().find(|b| b.name == name)
}
