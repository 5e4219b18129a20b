"""Raw table ingestion and linking.

Nine CSV tables describe an emergency department cohort: one root table of
ED stays plus child tables keyed by stay, subject, or admission. This module
parses them into typed records with explicit error semantics and links them
into an in-memory cohort object the rest of the pipeline consumes.

Error semantics, applied uniformly:

* a required header missing from a table aborts (MissingColumn);
* a row with the wrong field count aborts (MalformedRow), as does a
  structural key cell that does not parse as an integer;
* a non-empty, unparseable timestamp aborts only in the root table's time
  fields (BadTimestamp); in child tables the cell becomes missing and is
  logged with its row number;
* unparseable numeric cells become missing and are logged;
* two root rows sharing a stay id abort (DuplicateKey);
* a stay whose subject has no demographics row is dropped and logged;
* child rows whose stay id does not resolve are dropped and counted.

Temperatures are stored in Celsius; the input unit is configurable and
defaults to Fahrenheit, converted as (v - 32) * 5/9. Pain is kept only when
it parses as an integer in [0, 10].
"""

from __future__ import annotations

import csv
import datetime as dt
import logging
from dataclasses import dataclass, field

from ._util import (
    fahrenheit_to_celsius,
    format_cell,
    format_date,
    format_timestamp,
    parse_date,
    parse_float,
    parse_int,
    parse_timestamp,
)
from .errors import (
    BadTimestamp,
    ConfigError,
    DataError,
    DuplicateKey,
    MalformedRow,
    MissingColumn,
)

logger = logging.getLogger(__name__)

TABLE_KINDS = (
    "edstays",
    "triage",
    "vitalsign",
    "patients",
    "admissions",
    "icustays",
    "diagnoses_icd",
    "medrecon",
    "pyxis",
)

TEMPERATURE_UNITS = ("fahrenheit", "celsius")

VITAL_FIELDS = ("temperature", "heartrate", "resprate", "o2sat", "sbp", "dbp")


# -- record types -----------------------------------------------------------

@dataclass
class EdStayRecord:
    subject_id: int
    stay_id: int
    hadm_id: int | None
    intime: dt.datetime
    outtime: dt.datetime | None
    disposition: str


@dataclass
class TriageRecord:
    subject_id: int
    stay_id: int
    temperature: float | None
    heartrate: float | None
    resprate: float | None
    o2sat: float | None
    sbp: float | None
    dbp: float | None
    pain: int | None
    acuity: int | None
    chiefcomplaint: str


@dataclass
class VitalSignRecord:
    subject_id: int
    stay_id: int
    charttime: dt.datetime | None
    temperature: float | None
    heartrate: float | None
    resprate: float | None
    o2sat: float | None
    sbp: float | None
    dbp: float | None


@dataclass
class PatientRecord:
    subject_id: int
    gender: str | None
    anchor_age: int
    anchor_year: int
    dod: dt.date | None


@dataclass
class AdmissionRecord:
    subject_id: int
    hadm_id: int
    admittime: dt.datetime | None
    dischtime: dt.datetime | None
    deathtime: dt.datetime | None


@dataclass
class IcuStayRecord:
    subject_id: int
    hadm_id: int | None
    icu_stay_id: int
    intime: dt.datetime | None
    outtime: dt.datetime | None


@dataclass
class DiagnosisRecord:
    subject_id: int
    hadm_id: int
    seq_num: int
    icd_code: str
    icd_version: int


@dataclass
class MedreconRecord:
    subject_id: int
    stay_id: int
    name: str


@dataclass
class PyxisRecord:
    subject_id: int
    stay_id: int
    charttime: dt.datetime | None
    name: str


@dataclass
class RawTables:
    """The nine parsed tables, still unlinked."""

    edstays: list[EdStayRecord] = field(default_factory=list)
    triage: list[TriageRecord] = field(default_factory=list)
    vitalsign: list[VitalSignRecord] = field(default_factory=list)
    patients: list[PatientRecord] = field(default_factory=list)
    admissions: list[AdmissionRecord] = field(default_factory=list)
    icustays: list[IcuStayRecord] = field(default_factory=list)
    diagnoses_icd: list[DiagnosisRecord] = field(default_factory=list)
    medrecon: list[MedreconRecord] = field(default_factory=list)
    pyxis: list[PyxisRecord] = field(default_factory=list)


@dataclass
class LinkedCohort:
    """Root stays plus per-stay and per-subject attachment indices.

    Attachment lists are sorted by their natural time field so downstream
    window logic can rely on order. ``dropped_stays`` records (stay_id,
    reason) pairs; ``orphan_counts`` counts dropped child rows per table.
    """

    stays: list[EdStayRecord]
    patients: dict[int, PatientRecord]
    triage_by_stay: dict[int, TriageRecord]
    vitals_by_stay: dict[int, list[VitalSignRecord]]
    medrecon_by_stay: dict[int, list[MedreconRecord]]
    pyxis_by_stay: dict[int, list[PyxisRecord]]
    stays_by_subject: dict[int, list[EdStayRecord]]
    admissions_by_subject: dict[int, list[AdmissionRecord]]
    admissions_by_hadm: dict[int, AdmissionRecord]
    icustays_by_subject: dict[int, list[IcuStayRecord]]
    diagnoses_by_hadm: dict[int, list[DiagnosisRecord]]
    dropped_stays: list[tuple[int, str]]
    orphan_counts: dict[str, int]
    unresolved_hadm_stays: int = 0
    # per subject, diagnosis rows whose hadm_id has no admissions row; these
    # cannot be placed on a timeline and are skipped by lookback collection
    unresolved_diag_by_subject: dict[int, int] = field(default_factory=dict)


# -- schema -----------------------------------------------------------------

REQUIRED_COLUMNS: dict[str, tuple[str, ...]] = {
    "edstays": ("subject_id", "hadm_id", "stay_id", "intime", "outtime", "disposition"),
    "triage": ("subject_id", "stay_id", "temperature", "heartrate", "resprate",
               "o2sat", "sbp", "dbp", "pain", "acuity", "chiefcomplaint"),
    "vitalsign": ("subject_id", "stay_id", "charttime", "temperature", "heartrate",
                  "resprate", "o2sat", "sbp", "dbp"),
    "patients": ("subject_id", "gender", "anchor_age", "anchor_year", "dod"),
    "admissions": ("subject_id", "hadm_id", "admittime", "dischtime", "deathtime"),
    "icustays": ("subject_id", "hadm_id", "stay_id", "intime", "outtime"),
    "diagnoses_icd": ("subject_id", "hadm_id", "seq_num", "icd_code", "icd_version"),
    "medrecon": ("subject_id", "stay_id", "name"),
    "pyxis": ("subject_id", "stay_id", "charttime", "name"),
}


def convert_temperature(value: float, unit: str = "fahrenheit") -> float:
    """Normalize a temperature reading to Celsius."""
    if unit == "fahrenheit":
        return fahrenheit_to_celsius(value)
    if unit == "celsius":
        return value
    raise ConfigError(f"unknown temperature unit {unit!r}")


def _parse_pain(text: str) -> int | None:
    # Pain chartings are free text; keep only clean integers on the 0-10 scale.
    text = text.strip()
    if not text:
        return None
    try:
        value = int(text)
    except ValueError:
        return None
    if 0 <= value <= 10:
        return value
    return None


class _RowReader:
    """Header-checked CSV row access with per-cell parse helpers."""

    def __init__(self, path: str, kind: str):
        self.path = path
        self.kind = kind
        self.row_num = 0
        self.row: list[str] = []
        self.index: dict[str, int] = {}
        self.coerced_cells = 0

    def check_header(self, header: list[str]) -> None:
        self.index = {name.strip(): i for i, name in enumerate(header)}
        for col in REQUIRED_COLUMNS[self.kind]:
            if col not in self.index:
                raise MissingColumn(f"{self.path}: table {self.kind!r} lacks column {col!r}")
        self.width = len(header)

    def set_row(self, row: list[str], row_num: int) -> None:
        if len(row) != self.width:
            raise MalformedRow(
                f"{self.path} row {row_num}: expected {self.width} fields, got {len(row)}")
        self.row = row
        self.row_num = row_num

    def text(self, col: str) -> str:
        return self.row[self.index[col]].strip()

    def key_int(self, col: str, optional: bool = False) -> int | None:
        raw = self.text(col)
        if not raw:
            if optional:
                return None
            raise MalformedRow(f"{self.path} row {self.row_num}: empty key column {col!r}")
        value = parse_int(raw)
        if value is None:
            raise MalformedRow(
                f"{self.path} row {self.row_num}: key column {col!r} not an integer: {raw!r}")
        return value

    def number(self, col: str) -> float | None:
        raw = self.text(col)
        value = parse_float(raw)
        if raw and value is None:
            self.coerced_cells += 1
            logger.debug("%s row %d: unparseable %s %r -> missing",
                         self.path, self.row_num, col, raw)
        return value

    def small_int(self, col: str) -> int | None:
        raw = self.text(col)
        if not raw:
            return None
        value = parse_float(raw)
        if value is None or value != int(value):
            self.coerced_cells += 1
            logger.debug("%s row %d: unparseable %s %r -> missing",
                         self.path, self.row_num, col, raw)
            return None
        return int(value)

    def time_strict(self, col: str, required: bool) -> dt.datetime | None:
        # Root-table time fields: a non-empty cell must parse or we abort.
        raw = self.text(col)
        if not raw:
            if required:
                raise BadTimestamp(
                    f"{self.path} row {self.row_num}: empty required timestamp {col!r}")
            return None
        try:
            return parse_timestamp(raw)
        except ValueError:
            raise BadTimestamp(
                f"{self.path} row {self.row_num}: bad timestamp {col!r}={raw!r}") from None

    def time_lenient(self, col: str) -> dt.datetime | None:
        raw = self.text(col)
        try:
            return parse_timestamp(raw)
        except ValueError:
            self.coerced_cells += 1
            logger.debug("%s row %d: bad timestamp %s %r -> missing",
                         self.path, self.row_num, col, raw)
            return None

    def date_lenient(self, col: str) -> dt.date | None:
        raw = self.text(col)
        try:
            return parse_date(raw)
        except ValueError:
            self.coerced_cells += 1
            logger.debug("%s row %d: bad date %s %r -> missing",
                         self.path, self.row_num, col, raw)
            return None


def parse_table(path: str, kind: str, temperature_unit: str = "fahrenheit"):
    """Parse one CSV table into a list of typed records.

    ``kind`` selects the schema (one of TABLE_KINDS). Temperatures in triage
    and vitalsign tables are converted from ``temperature_unit`` to Celsius.
    """
    if kind not in TABLE_KINDS:
        raise ConfigError(f"unknown table kind {kind!r}")
    if temperature_unit not in TEMPERATURE_UNITS:
        raise ConfigError(f"unknown temperature unit {temperature_unit!r}")

    reader = _RowReader(path, kind)
    records: list = []
    with open(path, newline="", encoding="utf-8") as fh:
        rows = csv.reader(fh)
        try:
            header = next(rows)
        except StopIteration:
            raise MissingColumn(f"{path}: empty file, no header") from None
        reader.check_header(header)
        build = _BUILDERS[kind]
        for row_num, row in enumerate(rows, start=2):
            reader.set_row(row, row_num)
            records.append(build(reader, temperature_unit))

    if reader.coerced_cells:
        logger.warning("%s: %d unparseable cells coerced to missing (see debug log)",
                       path, reader.coerced_cells)
    logger.info("parsed %s: %d records", path, len(records))
    return records


def _temp(reader: _RowReader, unit: str) -> float | None:
    value = reader.number("temperature")
    if value is None:
        return None
    return convert_temperature(value, unit)


def _build_edstay(r: _RowReader, unit: str) -> EdStayRecord:
    return EdStayRecord(
        subject_id=r.key_int("subject_id"),
        stay_id=r.key_int("stay_id"),
        hadm_id=r.key_int("hadm_id", optional=True),
        intime=r.time_strict("intime", required=True),
        outtime=r.time_strict("outtime", required=False),
        disposition=r.text("disposition"),
    )


def _build_triage(r: _RowReader, unit: str) -> TriageRecord:
    return TriageRecord(
        subject_id=r.key_int("subject_id"),
        stay_id=r.key_int("stay_id"),
        temperature=_temp(r, unit),
        heartrate=r.number("heartrate"),
        resprate=r.number("resprate"),
        o2sat=r.number("o2sat"),
        sbp=r.number("sbp"),
        dbp=r.number("dbp"),
        pain=_parse_pain(r.text("pain")),
        acuity=r.small_int("acuity"),
        chiefcomplaint=r.text("chiefcomplaint"),
    )


def _build_vitalsign(r: _RowReader, unit: str) -> VitalSignRecord:
    return VitalSignRecord(
        subject_id=r.key_int("subject_id"),
        stay_id=r.key_int("stay_id"),
        charttime=r.time_lenient("charttime"),
        temperature=_temp(r, unit),
        heartrate=r.number("heartrate"),
        resprate=r.number("resprate"),
        o2sat=r.number("o2sat"),
        sbp=r.number("sbp"),
        dbp=r.number("dbp"),
    )


def _build_patient(r: _RowReader, unit: str) -> PatientRecord:
    gender = r.text("gender").upper() or None
    if gender is not None and gender not in ("F", "M"):
        logger.debug("%s row %d: unexpected gender %r -> missing", r.path, r.row_num, gender)
        r.coerced_cells += 1
        gender = None
    anchor_age = r.key_int("anchor_age")
    anchor_year = r.key_int("anchor_year")
    return PatientRecord(
        subject_id=r.key_int("subject_id"),
        gender=gender,
        anchor_age=anchor_age,
        anchor_year=anchor_year,
        dod=r.date_lenient("dod"),
    )


def _build_admission(r: _RowReader, unit: str) -> AdmissionRecord:
    return AdmissionRecord(
        subject_id=r.key_int("subject_id"),
        hadm_id=r.key_int("hadm_id"),
        admittime=r.time_lenient("admittime"),
        dischtime=r.time_lenient("dischtime"),
        deathtime=r.time_lenient("deathtime"),
    )


def _build_icustay(r: _RowReader, unit: str) -> IcuStayRecord:
    return IcuStayRecord(
        subject_id=r.key_int("subject_id"),
        hadm_id=r.key_int("hadm_id", optional=True),
        icu_stay_id=r.key_int("stay_id"),
        intime=r.time_lenient("intime"),
        outtime=r.time_lenient("outtime"),
    )


def _build_diagnosis(r: _RowReader, unit: str) -> DiagnosisRecord:
    version = r.small_int("icd_version")
    return DiagnosisRecord(
        subject_id=r.key_int("subject_id"),
        hadm_id=r.key_int("hadm_id"),
        seq_num=r.key_int("seq_num"),
        icd_code=r.text("icd_code"),
        icd_version=0 if version is None else version,
    )


def _build_medrecon(r: _RowReader, unit: str) -> MedreconRecord:
    return MedreconRecord(
        subject_id=r.key_int("subject_id"),
        stay_id=r.key_int("stay_id"),
        name=r.text("name"),
    )


def _build_pyxis(r: _RowReader, unit: str) -> PyxisRecord:
    return PyxisRecord(
        subject_id=r.key_int("subject_id"),
        stay_id=r.key_int("stay_id"),
        charttime=r.time_lenient("charttime"),
        name=r.text("name"),
    )


_BUILDERS = {
    "edstays": _build_edstay,
    "triage": _build_triage,
    "vitalsign": _build_vitalsign,
    "patients": _build_patient,
    "admissions": _build_admission,
    "icustays": _build_icustay,
    "diagnoses_icd": _build_diagnosis,
    "medrecon": _build_medrecon,
    "pyxis": _build_pyxis,
}


# -- serialization (inverse of parse_table) ----------------------------------

def _celsius_out(value: float | None, unit: str) -> float | None:
    if value is None:
        return None
    if unit == "fahrenheit":
        return value * 9.0 / 5.0 + 32.0
    return value


def write_table(records, kind: str, path: str, temperature_unit: str = "fahrenheit") -> None:
    """Serialize records back to CSV, the exact inverse of parse_table.

    Temperatures are written back in ``temperature_unit``. Missing values
    become empty cells; floats use shortest round-trip formatting, so
    parse(write(parse(x))) == parse(x).
    """
    if kind not in TABLE_KINDS:
        raise ConfigError(f"unknown table kind {kind!r}")
    columns = REQUIRED_COLUMNS[kind]
    with open(path, "w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh)
        writer.writerow(columns)
        for rec in records:
            writer.writerow([_serialize_cell(rec, col, kind, temperature_unit)
                             for col in columns])
    logger.info("wrote %s: %d records", path, len(records))


def _serialize_cell(rec, col: str, kind: str, unit: str) -> str:
    if col == "stay_id" and kind == "icustays":
        return format_cell(rec.icu_stay_id)
    value = getattr(rec, col)
    if isinstance(value, dt.datetime):
        return format_timestamp(value)
    if isinstance(value, dt.date):
        return format_date(value)
    if col == "temperature":
        return format_cell(_celsius_out(value, unit))
    if col in ("intime", "outtime", "charttime", "admittime", "dischtime",
               "deathtime", "dod"):
        return ""  # None time field
    return format_cell(value)


def read_raw_tables(input_dir: str, temperature_unit: str = "fahrenheit") -> RawTables:
    """Parse all nine tables from ``input_dir`` (files named <kind>.csv)."""
    import os

    tables = RawTables()
    for kind in TABLE_KINDS:
        path = os.path.join(input_dir, f"{kind}.csv")
        if not os.path.exists(path):
            raise DataError(f"missing input table: {path}")
        setattr(tables, kind, parse_table(path, kind, temperature_unit))
    return tables


# -- linking ------------------------------------------------------------------

def link_tables(tables: RawTables) -> LinkedCohort:
    """Join the nine tables around the root stays.

    Root stays missing an outtime or demographics are dropped (logged and
    recorded in dropped_stays); child rows that do not resolve to a kept
    root are dropped and tallied in orphan_counts. Duplicate primary keys
    abort. Attachment lists come out time-sorted.
    """
    patients: dict[int, PatientRecord] = {}
    for rec in tables.patients:
        if rec.subject_id in patients:
            raise DuplicateKey(f"patients: duplicate subject_id {rec.subject_id}")
        patients[rec.subject_id] = rec

    admissions_by_hadm: dict[int, AdmissionRecord] = {}
    for rec in tables.admissions:
        if rec.hadm_id in admissions_by_hadm:
            raise DuplicateKey(f"admissions: duplicate hadm_id {rec.hadm_id}")
        admissions_by_hadm[rec.hadm_id] = rec

    seen_icu: set[int] = set()
    for rec in tables.icustays:
        if rec.icu_stay_id in seen_icu:
            raise DuplicateKey(f"icustays: duplicate stay_id {rec.icu_stay_id}")
        seen_icu.add(rec.icu_stay_id)

    dropped: list[tuple[int, str]] = []
    orphans: dict[str, int] = {k: 0 for k in TABLE_KINDS if k != "edstays"}
    unresolved_hadm = 0

    stays: list[EdStayRecord] = []
    seen_stays: set[int] = set()
    for rec in tables.edstays:
        if rec.stay_id in seen_stays:
            raise DuplicateKey(f"edstays: duplicate stay_id {rec.stay_id}")
        seen_stays.add(rec.stay_id)
        if rec.outtime is None:
            dropped.append((rec.stay_id, "missing_outtime"))
            logger.warning("stay %d dropped: missing outtime", rec.stay_id)
            continue
        if rec.subject_id not in patients:
            dropped.append((rec.stay_id, "missing_patient"))
            logger.warning("stay %d dropped: subject %d has no patients row",
                           rec.stay_id, rec.subject_id)
            continue
        if rec.hadm_id is not None and rec.hadm_id not in admissions_by_hadm:
            unresolved_hadm += 1
        stays.append(rec)
    stays.sort(key=lambda s: s.stay_id)
    kept_ids = {s.stay_id for s in stays}

    triage_by_stay: dict[int, TriageRecord] = {}
    for trec in tables.triage:
        if trec.stay_id not in kept_ids:
            orphans["triage"] += 1
            continue
        if trec.stay_id in triage_by_stay:
            raise DuplicateKey(f"triage: duplicate stay_id {trec.stay_id}")
        triage_by_stay[trec.stay_id] = trec

    vitals_by_stay: dict[int, list[VitalSignRecord]] = {}
    for vrec in tables.vitalsign:
        if vrec.stay_id not in kept_ids:
            orphans["vitalsign"] += 1
            continue
        vitals_by_stay.setdefault(vrec.stay_id, []).append(vrec)
    for lst in vitals_by_stay.values():
        lst.sort(key=lambda v: (v.charttime is None, v.charttime))

    medrecon_by_stay: dict[int, list[MedreconRecord]] = {}
    for mrec in tables.medrecon:
        if mrec.stay_id not in kept_ids:
            orphans["medrecon"] += 1
            continue
        medrecon_by_stay.setdefault(mrec.stay_id, []).append(mrec)

    pyxis_by_stay: dict[int, list[PyxisRecord]] = {}
    for prec in tables.pyxis:
        if prec.stay_id not in kept_ids:
            orphans["pyxis"] += 1
            continue
        pyxis_by_stay.setdefault(prec.stay_id, []).append(prec)

    stays_by_subject: dict[int, list[EdStayRecord]] = {}
    for srec in stays:
        stays_by_subject.setdefault(srec.subject_id, []).append(srec)
    for lst in stays_by_subject.values():
        lst.sort(key=lambda s: (s.intime, s.stay_id))

    admissions_by_subject: dict[int, list[AdmissionRecord]] = {}
    for arec in tables.admissions:
        if arec.subject_id not in patients:
            orphans["admissions"] += 1
            continue
        admissions_by_subject.setdefault(arec.subject_id, []).append(arec)
    for lst in admissions_by_subject.values():
        lst.sort(key=lambda a: (a.admittime is None, a.admittime, a.hadm_id))

    icustays_by_subject: dict[int, list[IcuStayRecord]] = {}
    for irec in tables.icustays:
        if irec.subject_id not in patients:
            orphans["icustays"] += 1
            continue
        icustays_by_subject.setdefault(irec.subject_id, []).append(irec)
    for lst in icustays_by_subject.values():
        lst.sort(key=lambda i: (i.intime is None, i.intime, i.icu_stay_id))

    diagnoses_by_hadm: dict[int, list[DiagnosisRecord]] = {}
    unresolved_diag: dict[int, int] = {}
    for drec in tables.diagnoses_icd:
        if drec.subject_id not in patients:
            orphans["diagnoses_icd"] += 1
            continue
        if drec.hadm_id not in admissions_by_hadm:
            unresolved_diag[drec.subject_id] = unresolved_diag.get(drec.subject_id, 0) + 1
            continue
        diagnoses_by_hadm.setdefault(drec.hadm_id, []).append(drec)
    for lst in diagnoses_by_hadm.values():
        lst.sort(key=lambda d: d.seq_num)
    if unresolved_diag:
        logger.warning("%d diagnosis rows reference unknown admissions (skipped)",
                       sum(unresolved_diag.values()))

    # Vitals charted far outside their stay window are suspicious but kept.
    window_violations = 0
    stay_by_id = {s.stay_id: s for s in stays}
    slack = dt.timedelta(hours=1)
    for sid, lst in vitals_by_stay.items():
        stay = stay_by_id[sid]
        for vrec in lst:
            if vrec.charttime is None:
                continue
            if not (stay.intime - slack <= vrec.charttime <= stay.outtime + slack):
                window_violations += 1
                logger.debug("vitals row for stay %d charted outside window: %s",
                             sid, vrec.charttime)
    if window_violations:
        logger.warning("%d vitalsign rows charted outside their stay window (kept)",
                       window_violations)

    total_orphans = sum(orphans.values())
    if total_orphans:
        logger.warning("dropped %d orphan child rows: %s", total_orphans,
                       {k: v for k, v in orphans.items() if v})
    logger.info("linked cohort: %d stays kept, %d dropped, %d subjects",
                len(stays), len(dropped), len(stays_by_subject))

    return LinkedCohort(
        stays=stays,
        patients=patients,
        triage_by_stay=triage_by_stay,
        vitals_by_stay=vitals_by_stay,
        medrecon_by_stay=medrecon_by_stay,
        pyxis_by_stay=pyxis_by_stay,
        stays_by_subject=stays_by_subject,
        admissions_by_subject=admissions_by_subject,
        admissions_by_hadm=admissions_by_hadm,
        icustays_by_subject=icustays_by_subject,
        diagnoses_by_hadm=diagnoses_by_hadm,
        dropped_stays=dropped,
        orphan_counts=orphans,
        unresolved_hadm_stays=unresolved_hadm,
        unresolved_diag_by_subject=unresolved_diag,
    )
